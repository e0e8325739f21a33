//! Decision and constraint tables compiled into theory formulas.
//!
//! A table file holds one or more tables in a plain grid:
//!
//! ```text
//! table "Calculation of MinElongation"
//! U | Support   || MinElongation
//! 1 | fixed     || deltaLength / BondThickness
//! 2 | not fixed || 0
//! end
//! ```
//!
//! The first header cell is the hit policy (`U` or `E*`); input columns come
//! before `||`, outputs after it. Column headers are terms such as
//! `Known(strength)`. A table line may bind variables for the whole table:
//! `table "Name" for a in Adhesive, p in Param`.
//!
//! Cells are `-` (anything), a value or expression, a comparison (`>= 5`),
//! a range (`[1..4)`), a list of alternatives (`a, b`) or a negated list
//! (`not a, b`). Lines starting with `//` are comments.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::ground::{ground, GroundError};
use crate::model::{well_formed, CmpOp, Formula, LabeledFormula, PartialStructure, Term, Theory, Value, Vocabulary};
use crate::parser::{parse_term_scoped, ParseDiagnostic, SourceSpan};
use crate::solve::{check, Budget, CheckResult, SolveError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HitPolicy {
    /// Rows are mutually exclusive; outputs are assigned.
    U,
    /// Every firing row's outputs are constraints.
    Estar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CellExpr {
    Any,
    /// A constant or an arithmetic expression, compared for equality.
    Value(String),
    Cmp(CmpOp, String),
    /// Bounds with strictness; a missing side is open-ended.
    Range {
        lo: Option<(String, bool)>,
        hi: Option<(String, bool)>,
    },
    OneOf(Vec<String>),
    NoneOf(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableCell {
    pub expr: CellExpr,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Column {
    pub text: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Row {
    pub inputs: Vec<TableCell>,
    pub outputs: Vec<TableCell>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecisionTable {
    pub name: String,
    pub hit_policy: HitPolicy,
    /// Table-wide variables and their types.
    pub vars: Vec<(String, String)>,
    pub inputs: Vec<Column>,
    pub outputs: Vec<Column>,
    pub rows: Vec<Row>,
    pub span: SourceSpan,
}

#[derive(Debug, Error)]
pub enum CdmnError {
    #[error("{}", fmt_diags(.0))]
    Diagnostics(Vec<ParseDiagnostic>),
    #[error("table `{table}` has overlapping rows {pairs:?}")]
    Overlap { table: String, pairs: Vec<(usize, usize)> },
    #[error("table `{0}` has the wrong hit policy for this operation")]
    Policy(String),
    #[error("decision requirements contain a cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn fmt_diags(d: &[ParseDiagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

// -- parsing ---------------------------------------------------------------

struct Line<'a> {
    no: usize,
    text: &'a str,
}

/// Splits a grid line on `|`, returning each piece trimmed with its
/// 1-based starting column.
fn split_cells(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        if ch == '|' {
            out.push((start, &text[start..i]));
            start = i + 1;
        }
    }
    out.push((start, &text[start..]));
    out.into_iter()
        .map(|(s, piece)| {
            let lead = piece.len() - piece.trim_start().len();
            (text[..s + lead].chars().count() + 1, piece.trim())
        })
        .collect()
}

/// Splits at the `||` separator: inputs then outputs, each with columns.
fn split_row(text: &str) -> Option<(Vec<(usize, &str)>, Vec<(usize, &str)>)> {
    let cells = split_cells(text);
    // `||` shows up as an empty piece between two bars.
    let sep = cells.iter().skip(1).position(|(_, c)| c.is_empty())? + 1;
    let left = cells[..sep].to_vec();
    let right = cells[sep + 1..].to_vec();
    Some((left, right))
}

fn cell_expr(text: &str) -> Result<CellExpr, String> {
    let t = text.trim();
    if t.is_empty() {
        return Err("empty cell; use `-` for any value".into());
    }
    if t == "-" {
        return Ok(CellExpr::Any);
    }
    if let Some(rest) = t.strip_prefix("not ") {
        return Ok(CellExpr::NoneOf(list(rest)?));
    }
    for (sym, op) in [
        (">=", CmpOp::Ge),
        ("=<", CmpOp::Le),
        ("<=", CmpOp::Le),
        ("~=", CmpOp::Ne),
        ("!=", CmpOp::Ne),
        ("≠", CmpOp::Ne),
        ("≤", CmpOp::Le),
        ("≥", CmpOp::Ge),
        (">", CmpOp::Gt),
        ("<", CmpOp::Lt),
        ("=", CmpOp::Eq),
    ] {
        if let Some(rest) = t.strip_prefix(sym) {
            let rest = rest.trim();
            if rest.is_empty() {
                return Err(format!("comparison `{sym}` without a right-hand side"));
            }
            return Ok(CellExpr::Cmp(op, rest.to_string()));
        }
    }
    if (t.starts_with('[') || t.starts_with('(')) && (t.ends_with(']') || t.ends_with(')')) && t.contains("..") {
        let lo_strict = t.starts_with('(');
        let hi_strict = t.ends_with(')');
        let inner = &t[1..t.len() - 1];
        let (a, b) = inner.split_once("..").expect("checked");
        let side = |s: &str, strict| {
            let s = s.trim();
            if s.is_empty() {
                None
            } else {
                Some((s.to_string(), strict))
            }
        };
        return Ok(CellExpr::Range { lo: side(a, lo_strict), hi: side(b, hi_strict) });
    }
    if t.contains(',') && !t.contains('(') {
        return Ok(CellExpr::OneOf(list(t)?));
    }
    Ok(CellExpr::Value(t.to_string()))
}

fn list(text: &str) -> Result<Vec<String>, String> {
    let items: Vec<String> = text.split(',').map(|s| s.trim().to_string()).collect();
    if items.iter().any(String::is_empty) {
        return Err("empty entry in list".into());
    }
    Ok(items)
}

/// Parses a table file. Only the grid structure is checked here; cell
/// contents are typed against a vocabulary when compiling.
pub fn parse_tables(text: &str, file: &str) -> Result<Vec<DecisionTable>, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let mut tables = Vec::new();
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, l)| Line { no: i + 1, text: l })
        .filter(|l| !l.text.trim().is_empty() && !l.text.trim_start().starts_with("//"))
        .collect();
    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        let lead = line.text.len() - line.text.trim_start().len() + 1;
        let span = SourceSpan::new(file, line.no, lead, line.text.trim().chars().count());
        let Some(head) = line.text.trim().strip_prefix("table") else {
            diags.push(ParseDiagnostic::error("expected `table \"name\"`", span));
            i += 1;
            continue;
        };
        let (name, vars) = match table_line(head) {
            Ok(x) => x,
            Err(m) => {
                diags.push(ParseDiagnostic::error(m, span));
                // skip to the end of this table
                while i < lines.len() && lines[i].text.trim() != "end" {
                    i += 1;
                }
                i += 1;
                continue;
            }
        };
        i += 1;
        let mut body = Vec::new();
        let mut closed = false;
        while i < lines.len() {
            if lines[i].text.trim() == "end" {
                closed = true;
                i += 1;
                break;
            }
            if lines[i].text.trim_start().starts_with("table") {
                break;
            }
            body.push(&lines[i]);
            i += 1;
        }
        if !closed {
            diags.push(ParseDiagnostic::error(format!("table `{name}` is missing `end`"), span.clone()));
        }
        if let Some(t) = table_body(name, vars, &body, span, file, &mut diags) {
            tables.push(t);
        }
    }
    if diags.iter().any(ParseDiagnostic::is_error) {
        Err(diags)
    } else {
        Ok(tables)
    }
}

/// Parses a file that must contain exactly one table.
pub fn parse_table(text: &str) -> Result<DecisionTable, Vec<ParseDiagnostic>> {
    let mut ts = parse_tables(text, "<table>")?;
    match ts.len() {
        1 => Ok(ts.pop().expect("one")),
        n => Err(vec![ParseDiagnostic::error(
            format!("expected one table, found {n}"),
            SourceSpan::new("<table>", 1, 1, 1),
        )]),
    }
}

fn table_line(head: &str) -> Result<(String, Vec<(String, String)>), String> {
    let head = head.trim();
    let rest = head.strip_prefix('"').ok_or("table name must be quoted")?;
    let end = rest.find('"').ok_or("unterminated table name")?;
    let name = rest[..end].to_string();
    let tail = rest[end + 1..].trim();
    let mut vars = Vec::new();
    if !tail.is_empty() {
        let binds = tail.strip_prefix("for ").ok_or_else(|| format!("unexpected `{tail}` after table name"))?;
        for b in binds.split(',') {
            let (v, t) = b.split_once(" in ").ok_or_else(|| format!("expected `var in Type`, found `{}`", b.trim()))?;
            vars.push((v.trim().to_string(), t.trim().to_string()));
        }
    }
    Ok((name, vars))
}

fn table_body(
    name: String,
    vars: Vec<(String, String)>,
    body: &[&Line],
    span: SourceSpan,
    file: &str,
    diags: &mut Vec<ParseDiagnostic>,
) -> Option<DecisionTable> {
    let Some(header) = body.first() else {
        diags.push(ParseDiagnostic::error(format!("table `{name}` has no header"), span));
        return None;
    };
    let hspan = |col: usize, len: usize| SourceSpan::new(file, header.no, col, len);
    let Some((left, right)) = split_row(header.text) else {
        diags.push(ParseDiagnostic::error("header needs `||` between inputs and outputs", hspan(1, header.text.len())));
        return None;
    };
    let (pcol, policy) = left[0];
    let hit_policy = match policy {
        "U" => HitPolicy::U,
        "E*" => HitPolicy::Estar,
        other => {
            diags.push(ParseDiagnostic::error(
                format!("unknown hit policy `{other}`; expected `U` or `E*`"),
                hspan(pcol, other.chars().count()),
            ));
            return None;
        }
    };
    let column = |(c, t): &(usize, &str)| Column { text: t.to_string(), span: hspan(*c, t.chars().count()) };
    let inputs: Vec<Column> = left[1..].iter().map(column).collect();
    let outputs: Vec<Column> = right.iter().map(column).collect();
    for c in inputs.iter().chain(&outputs) {
        if c.text.is_empty() {
            diags.push(ParseDiagnostic::error("empty column header", c.span.clone()));
        }
    }
    if outputs.is_empty() {
        diags.push(ParseDiagnostic::error("table has no output column", hspan(1, header.text.len())));
    }
    let mut rows = Vec::new();
    for line in &body[1..] {
        let rspan = SourceSpan::new(file, line.no, 1, line.text.chars().count());
        let Some((left, right)) = split_row(line.text) else {
            diags.push(ParseDiagnostic::error("row needs `||` between inputs and outputs", rspan));
            continue;
        };
        let (got_in, got_out) = (left.len() - 1, right.len());
        if got_in != inputs.len() || got_out != outputs.len() {
            diags.push(ParseDiagnostic::error(
                format!(
                    "row has {got_in} input and {got_out} output cell(s), header has {} and {}",
                    inputs.len(),
                    outputs.len()
                ),
                rspan,
            ));
            continue;
        }
        let mut cell = |(c, t): &(usize, &str)| -> Option<TableCell> {
            let span = SourceSpan::new(file, line.no, *c, t.chars().count());
            match cell_expr(t) {
                Ok(expr) => Some(TableCell { expr, span }),
                Err(m) => {
                    diags.push(ParseDiagnostic::error(m, span));
                    None
                }
            }
        };
        let ins: Option<Vec<TableCell>> = left[1..].iter().map(&mut cell).collect();
        let outs: Option<Vec<TableCell>> = right.iter().map(&mut cell).collect();
        if let (Some(inputs), Some(outputs)) = (ins, outs) {
            rows.push(Row { inputs, outputs, span: rspan });
        }
    }
    Some(DecisionTable { name, hit_policy, vars, inputs, outputs, rows, span })
}

// -- compilation -----------------------------------------------------------

struct Ctx<'a> {
    voc: &'a Vocabulary,
    vars: Vec<String>,
    diags: Vec<ParseDiagnostic>,
}

impl Ctx<'_> {
    fn term(&mut self, text: &str, span: &SourceSpan) -> Option<Term> {
        match parse_term_scoped(text, self.voc, &span.file, &self.vars) {
            Ok(t) => Some(t),
            Err(ds) => {
                for d in ds {
                    // Cell text is parsed on its own; shift to the grid.
                    let mut s = span.clone();
                    s.column += d.span.column.saturating_sub(1);
                    s.length = d.span.length;
                    self.diags.push(ParseDiagnostic { span: s, ..d });
                }
                None
            }
        }
    }

    /// Condition that `col` satisfies the cell; `None` for `-`.
    fn condition(&mut self, col: &Term, cell: &TableCell) -> Option<Option<Formula>> {
        let eq = |a: &Term, b: Term| match b {
            Term::Const(Value::Bool(true)) => Formula::Pred(a.clone()),
            Term::Const(Value::Bool(false)) => Formula::not(Formula::Pred(a.clone())),
            b => Formula::eq(a.clone(), b),
        };
        let s = &cell.span;
        Some(Some(match &cell.expr {
            CellExpr::Any => return Some(None),
            CellExpr::Value(t) => eq(col, self.term(t, s)?),
            CellExpr::Cmp(op, t) => Formula::cmp(*op, col.clone(), self.term(t, s)?),
            CellExpr::Range { lo, hi } => {
                let mut parts = Vec::new();
                if let Some((t, strict)) = lo {
                    let op = if *strict { CmpOp::Gt } else { CmpOp::Ge };
                    parts.push(Formula::cmp(op, col.clone(), self.term(t, s)?));
                }
                if let Some((t, strict)) = hi {
                    let op = if *strict { CmpOp::Lt } else { CmpOp::Le };
                    parts.push(Formula::cmp(op, col.clone(), self.term(t, s)?));
                }
                match parts.len() {
                    0 => return Some(None),
                    1 => parts.pop().expect("one"),
                    _ => Formula::And(parts),
                }
            }
            CellExpr::OneOf(items) => {
                let mut parts = Vec::new();
                for t in items {
                    parts.push(eq(col, self.term(t, s)?));
                }
                Formula::Or(parts)
            }
            CellExpr::NoneOf(items) => {
                let mut parts = Vec::new();
                for t in items {
                    parts.push(Formula::cmp(CmpOp::Ne, col.clone(), self.term(t, s)?));
                }
                if parts.len() == 1 {
                    parts.pop().expect("one")
                } else {
                    Formula::And(parts)
                }
            }
        }))
    }
}

/// Per-row (inputs, outputs) formulas of a table, typed against `voc`.
/// Rows whose cells are all `-` on one side get `None` there.
fn row_formulas(t: &DecisionTable, voc: &Vocabulary) -> Result<Vec<(Option<Formula>, Option<Formula>)>, CdmnError> {
    let mut cx = Ctx { voc, vars: t.vars.iter().map(|(v, _)| v.clone()).collect(), diags: Vec::new() };
    for (v, ty) in &t.vars {
        if voc.type_decl(ty).is_none() {
            cx.diags.push(ParseDiagnostic::error(format!("unknown type `{ty}` for `{v}`"), t.span.clone()));
        }
    }
    let ins: Vec<Option<Term>> = t.inputs.iter().map(|c| cx.term(&c.text, &c.span)).collect();
    let outs: Vec<Option<Term>> = t.outputs.iter().map(|c| cx.term(&c.text, &c.span)).collect();
    let mut rows = Vec::new();
    for (k, row) in t.rows.iter().enumerate() {
        if t.hit_policy == HitPolicy::U {
            for c in &row.outputs {
                if !matches!(c.expr, CellExpr::Value(_) | CellExpr::Any) {
                    cx.diags.push(ParseDiagnostic::error(
                        format!("row {} of a U table must assign its outputs, not constrain them", k + 1),
                        c.span.clone(),
                    ));
                }
            }
        }
        let mut side = |cols: &[Option<Term>], cells: &[TableCell]| -> Option<Option<Formula>> {
            let mut parts = Vec::new();
            let mut ok = true;
            for (col, cell) in cols.iter().zip(cells) {
                let Some(col) = col else {
                    ok = false;
                    continue;
                };
                match cx.condition(col, cell) {
                    Some(Some(f)) => parts.push(f),
                    Some(None) => {}
                    None => ok = false,
                }
            }
            ok.then(|| match parts.len() {
                0 => None,
                1 => parts.pop(),
                _ => Some(Formula::And(parts)),
            })
        };
        let i = side(&ins, &row.inputs);
        let o = side(&outs, &row.outputs);
        if let (Some(i), Some(o)) = (i, o) {
            rows.push((i, o));
        }
    }
    if !cx.diags.is_empty() {
        return Err(CdmnError::Diagnostics(cx.diags));
    }
    // Type check every row as a closed formula.
    let mut th = Theory::new();
    for (k, (i, o)) in rows.iter().enumerate() {
        let f = Formula::And(i.iter().chain(o).cloned().collect());
        th.push(&format!("r{k}"), "row", quantify(&t.vars, f));
    }
    let errors = well_formed(voc, &th, &PartialStructure::new());
    if !errors.is_empty() {
        let diags = errors
            .iter()
            .map(|e| {
                let k: usize = e.location.trim_start_matches('r').parse().unwrap_or(0);
                let span = t.rows.get(k).map_or(t.span.clone(), |r| r.span.clone());
                ParseDiagnostic::error(e.to_string(), span)
            })
            .collect();
        return Err(CdmnError::Diagnostics(diags));
    }
    Ok(rows)
}

fn quantify(vars: &[(String, String)], mut f: Formula) -> Formula {
    for (v, ty) in vars.iter().rev() {
        f = Formula::forall(v, ty, f);
    }
    f
}

fn slug(name: &str) -> String {
    let mut s: String = name.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
    if !s.starts_with(|c: char| c.is_alphabetic()) {
        s.insert(0, 't');
    }
    s
}

fn row_law(t: &DecisionTable, k: usize, inputs: Option<Formula>, outputs: Formula) -> LabeledFormula {
    let body = match inputs {
        Some(i) => Formula::implies(i, outputs),
        None => outputs,
    };
    LabeledFormula {
        id: format!("{}_r{}", slug(&t.name), k + 1),
        label: format!("{} : row {}", t.name, k + 1),
        formula: quantify(&t.vars, body),
    }
}

/// Pairs of rows (1-based) whose input conditions can hold together.
pub fn check_unique(t: &DecisionTable, voc: &Vocabulary) -> Result<Vec<(usize, usize)>, CdmnError> {
    let rows = row_formulas(t, voc)?;
    let mut pairs = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let both: Vec<Formula> = rows[i].0.iter().chain(&rows[j].0).cloned().collect();
            let mut f = Formula::And(both);
            for (v, ty) in t.vars.iter().rev() {
                f = Formula::exists(v, ty, f);
            }
            let mut th = Theory::new();
            th.push("overlap", "overlap", f);
            let gp = ground(voc, &th, &PartialStructure::new())?;
            if check(&gp, &PartialStructure::new(), &Budget::default())?.is_sat() {
                pairs.push((i + 1, j + 1));
            }
        }
    }
    Ok(pairs)
}

/// An input combination no row covers, if there is one. Outputs are left
/// unconstrained there.
pub fn uncovered(t: &DecisionTable, voc: &Vocabulary) -> Result<Option<PartialStructure>, CdmnError> {
    let rows = row_formulas(t, voc)?;
    if rows.iter().any(|(i, _)| i.is_none()) {
        return Ok(None);
    }
    let mut f = Formula::not(Formula::Or(rows.into_iter().filter_map(|(i, _)| i).collect()));
    for (v, ty) in t.vars.iter().rev() {
        f = Formula::exists(v, ty, f);
    }
    let mut th = Theory::new();
    th.push("gap", "gap", f);
    let gp = ground(voc, &th, &PartialStructure::new())?;
    Ok(match check(&gp, &PartialStructure::new(), &Budget::default())? {
        CheckResult::Sat(m) => Some(m),
        CheckResult::Unsat => None,
    })
}

/// One implication per row of a U table, after checking exclusivity.
pub fn compile_decision(t: &DecisionTable, voc: &Vocabulary) -> Result<Vec<LabeledFormula>, CdmnError> {
    if t.hit_policy != HitPolicy::U {
        return Err(CdmnError::Policy(t.name.clone()));
    }
    let overlaps = check_unique(t, voc)?;
    if !overlaps.is_empty() {
        return Err(CdmnError::Overlap { table: t.name.clone(), pairs: overlaps });
    }
    let rows = row_formulas(t, voc)?;
    Ok(rows.into_iter().enumerate().filter_map(|(k, (i, o))| o.map(|o| row_law(t, k, i, o))).collect())
}

/// One implication per row of an E* table; rows need not be exclusive.
pub fn compile_constraint(t: &DecisionTable, voc: &Vocabulary) -> Result<Vec<LabeledFormula>, CdmnError> {
    if t.hit_policy != HitPolicy::Estar {
        return Err(CdmnError::Policy(t.name.clone()));
    }
    let rows = row_formulas(t, voc)?;
    Ok(rows.into_iter().enumerate().filter_map(|(k, (i, o))| o.map(|o| row_law(t, k, i, o))).collect())
}

pub fn compile(t: &DecisionTable, voc: &Vocabulary) -> Result<Vec<LabeledFormula>, CdmnError> {
    match t.hit_policy {
        HitPolicy::U => compile_decision(t, voc),
        HitPolicy::Estar => compile_constraint(t, voc),
    }
}

/// Compiles every table of a file into one theory.
pub fn compile_tables(tables: &[DecisionTable], voc: &Vocabulary) -> Result<Theory, CdmnError> {
    let mut th = Theory::new();
    for t in tables {
        th.formulas.extend(compile(t, voc)?);
    }
    Ok(th)
}

// -- decision requirements ---------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Input,
    Decision,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Drd {
    pub nodes: Vec<(String, NodeKind)>,
    /// Requirement to decision.
    pub edges: Vec<(String, String)>,
}

fn symbols_of(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::App(f, args) => {
            out.insert(f.clone());
            args.iter().for_each(|a| symbols_of(a, out));
        }
        Term::Neg(a) => symbols_of(a, out),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
            symbols_of(a, out);
            symbols_of(b, out);
        }
        Term::Var(_) | Term::Const(_) => {}
    }
}

fn formula_symbols(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::Bool(_) => {}
        Formula::Pred(t) => symbols_of(t, out),
        Formula::Cmp(_, a, b) => {
            symbols_of(a, out);
            symbols_of(b, out);
        }
        Formula::Not(g) => formula_symbols(g, out),
        Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| formula_symbols(g, out)),
        Formula::Implies(a, b) | Formula::Equiv(a, b) => {
            formula_symbols(a, out);
            formula_symbols(b, out);
        }
        Formula::Forall(_, _, b) | Formula::Exists(_, _, b) => formula_symbols(b, out),
    }
}

/// The requirement graph implied by the tables: each output symbol depends
/// on the symbols its table reads.
pub fn derive_drd(tables: &[DecisionTable], voc: &Vocabulary) -> Result<Drd, CdmnError> {
    let mut deps: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut all = BTreeSet::new();
    for t in tables {
        let mut cx = Ctx { voc, vars: t.vars.iter().map(|(v, _)| v.clone()).collect(), diags: Vec::new() };
        let mut reads = BTreeSet::new();
        let mut writes = BTreeSet::new();
        for c in &t.inputs {
            if let Some(term) = cx.term(&c.text, &c.span) {
                symbols_of(&term, &mut reads);
            }
        }
        for c in &t.outputs {
            if let Some(term) = cx.term(&c.text, &c.span) {
                if let Term::App(f, args) = &term {
                    writes.insert(f.clone());
                    args.iter().for_each(|a| symbols_of(a, &mut reads));
                }
            }
        }
        let rows = row_formulas(t, voc)?;
        for (_, o) in &rows {
            if let Some(o) = o {
                let mut s = BTreeSet::new();
                formula_symbols(o, &mut s);
                reads.extend(s.into_iter().filter(|x| !writes.contains(x)));
            }
        }
        if !cx.diags.is_empty() {
            return Err(CdmnError::Diagnostics(cx.diags));
        }
        for w in &writes {
            deps.entry(w.clone()).or_default().extend(reads.iter().cloned());
        }
        all.extend(reads);
        all.extend(writes);
    }
    let nodes: Vec<(String, NodeKind)> = all
        .iter()
        .map(|n| (n.clone(), if deps.contains_key(n) { NodeKind::Decision } else { NodeKind::Input }))
        .collect();
    let mut edges = Vec::new();
    for (d, reqs) in &deps {
        for r in reqs {
            edges.push((r.clone(), d.clone()));
        }
    }
    // Depth-first search for a cycle.
    fn visit(
        n: &str,
        deps: &BTreeMap<String, BTreeSet<String>>,
        state: &mut BTreeMap<String, u8>,
        path: &mut Vec<String>,
    ) -> Option<Vec<String>> {
        match state.get(n) {
            Some(2) => return None,
            Some(1) => {
                let start = path.iter().position(|p| p == n).unwrap_or(0);
                return Some(path[start..].to_vec());
            }
            _ => {}
        }
        state.insert(n.to_string(), 1);
        path.push(n.to_string());
        for r in deps.get(n).into_iter().flatten() {
            if let Some(c) = visit(r, deps, state, path) {
                return Some(c);
            }
        }
        path.pop();
        state.insert(n.to_string(), 2);
        None
    }
    let mut state = BTreeMap::new();
    for n in deps.keys() {
        if let Some(cycle) = visit(n, &deps, &mut state, &mut Vec::new()) {
            return Err(CdmnError::Cycle(cycle));
        }
    }
    Ok(Drd { nodes, edges })
}
