//! Textual knowledge-base format.
//!
//! A document holds up to three blocks:
//!
//! ```text
//! vocabulary {
//!     type Adhesive := {a1, a2}.
//!     type Temp := real[-100..200].
//!     @label("Minimum temperature") @category(Performance)
//!     MinTemp : () -> Temp.
//!     Strength : Adhesive -> Temp.
//! }
//! theory {
//!     @id(order) @label("Minimum temperature cannot exceed maximum")
//!     MinTemp =< MaxTemp.
//!     !a in Adhesive: Strength(a) >= 0.
//! }
//! structure {
//!     Strength(a1) = 15.
//!     @origin(user) MinTemp = 20.
//!     MaxTemp in [20..100).
//! }
//! ```
//!
//! Quantifiers are `!x in T:` and `?x in T:`, connectives `~ & | => <=>`,
//! comparisons `= ~= < =< > >=`. Comments run from `//` to the end of line.
//! Numbers are exact decimals.

mod lexer;
mod printer;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    Assignment, Bound, Category, CmpOp, Formula, Interval, Key, LabeledFormula, Origin, PartialStructure, Restriction,
    SymbolDecl, Term, Theory, TypeDecl, TypeKind, Value, Vocabulary,
};
use crate::rational::Rat;

pub(crate) use lexer::{Tok, Token};
pub use printer::{serialize, write_formula, write_term};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(file: &str, line: usize, column: usize, length: usize) -> Self {
        SourceSpan { file: file.to_string(), line: line.max(1), column: column.max(1), length: length.max(1) }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseDiagnostic {
    pub fn error(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseDiagnostic { severity: Severity::Error, message: message.into(), span }
    }

    pub fn warning(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseDiagnostic { severity: Severity::Warning, message: message.into(), span }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {}: {}", self.span, sev, self.message)
    }
}

/// The three blocks of a parsed document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub vocabulary: Vocabulary,
    pub theory: Theory,
    pub structure: PartialStructure,
}

/// Parses a document. Errors are returned only when at least one diagnostic
/// has error severity; warnings are dropped on success.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, Vec<ParseDiagnostic>> {
    parse_kb_file(text, "<input>")
}

pub fn parse_kb_file(text: &str, file: &str) -> Result<KnowledgeBase, Vec<ParseDiagnostic>> {
    let (kb, diags) = parse_kb_with_warnings(text, file);
    if diags.iter().any(ParseDiagnostic::is_error) {
        Err(diags)
    } else {
        Ok(kb)
    }
}

/// Parses a document and returns every diagnostic, warnings included. The
/// returned knowledge base holds whatever could be recovered.
pub fn parse_kb_with_warnings(text: &str, file: &str) -> (KnowledgeBase, Vec<ParseDiagnostic>) {
    let mut diags = Vec::new();
    let toks = lexer::lex(text, file, &mut diags);
    let mut p = Parser::new(toks, file, Vocabulary::new());
    p.diags = diags;
    let kb = p.document();
    (kb, p.diags)
}

/// Parses a single term against a vocabulary, e.g. a decision-table cell.
pub fn parse_term(text: &str, voc: &Vocabulary, file: &str) -> Result<Term, Vec<ParseDiagnostic>> {
    parse_term_scoped(text, voc, file, &[])
}

/// Like [`parse_term`], with `vars` treated as bound variables.
pub(crate) fn parse_term_scoped(
    text: &str,
    voc: &Vocabulary,
    file: &str,
    vars: &[String],
) -> Result<Term, Vec<ParseDiagnostic>> {
    let mut p = Parser::from_text(text, file, voc.clone());
    p.scope = vars.to_vec();
    let t = p.term();
    if t.is_ok() && !p.at(&Tok::Eof) {
        p.fail::<()>("unexpected trailing input").ok();
    }
    match t {
        Ok(t) if p.diags.is_empty() => Ok(t),
        _ => Err(p.diags),
    }
}

/// Parses a single closed formula against a vocabulary.
pub fn parse_formula(text: &str, voc: &Vocabulary, file: &str) -> Result<Formula, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let toks = lexer::lex(text, file, &mut diags);
    let mut p = Parser::new(toks, file, voc.clone());
    p.diags = diags;
    let f = p.formula();
    if f.is_ok() && !p.at(&Tok::Eof) {
        p.fail::<()>("unexpected trailing input").ok();
    }
    match f {
        Ok(f) if p.diags.is_empty() => Ok(f),
        _ => Err(p.diags),
    }
}

/// Marker for a failed production; the diagnostic is already recorded.
#[derive(Debug)]
pub(crate) struct Fail;

pub(crate) type PResult<T> = Result<T, Fail>;

struct Annotation {
    name: String,
    arg: String,
    span: SourceSpan,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    Vocabulary,
    Theory,
    Structure,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: String,
    pub(crate) diags: Vec<ParseDiagnostic>,
    pub(crate) voc: Vocabulary,
    scope: Vec<String>,
}

impl Parser {
    pub(crate) fn new(toks: Vec<Token>, file: &str, voc: Vocabulary) -> Self {
        Parser { toks, pos: 0, file: file.to_string(), diags: Vec::new(), voc, scope: Vec::new() }
    }

    pub(crate) fn from_text(text: &str, file: &str, voc: Vocabulary) -> Self {
        let mut diags = Vec::new();
        let toks = lexer::lex(text, file, &mut diags);
        let mut p = Parser::new(toks, file, voc);
        p.diags = diags;
        p
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos.min(self.toks.len() - 1)].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn span(&self) -> SourceSpan {
        let t = &self.toks[self.pos.min(self.toks.len() - 1)];
        SourceSpan::new(&self.file, t.line, t.column, t.length)
    }

    fn span_of(&self, idx: usize) -> SourceSpan {
        let t = &self.toks[idx.min(self.toks.len() - 1)];
        SourceSpan::new(&self.file, t.line, t.column, t.length)
    }

    pub(crate) fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn fail<T>(&mut self, message: impl Into<String>) -> PResult<T> {
        let span = self.span();
        self.diags.push(ParseDiagnostic::error(message, span));
        Err(Fail)
    }

    pub(crate) fn expect(&mut self, tok: &Tok) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            let found = self.peek().describe();
            self.fail(format!("expected {}, found {}", tok.describe(), found))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.fail(format!("expected identifier, found {}", other.describe())),
        }
    }

    // -- document ---------------------------------------------------------

    fn document(&mut self) -> KnowledgeBase {
        // Locate top-level blocks first so the vocabulary can be read before
        // the blocks whose names it resolves.
        let mut blocks: Vec<(BlockKind, usize, usize)> = Vec::new();
        let mut seen: Vec<BlockKind> = Vec::new();
        while !self.at(&Tok::Eof) {
            let kind = match self.peek() {
                Tok::Ident(w) if w == "vocabulary" => Some(BlockKind::Vocabulary),
                Tok::Ident(w) if w == "theory" => Some(BlockKind::Theory),
                Tok::Ident(w) if w == "structure" => Some(BlockKind::Structure),
                _ => None,
            };
            let Some(kind) = kind else {
                let found = self.peek().describe();
                let _ =
                    self.fail::<()>(format!("unknown keyword {found}: expected `vocabulary`, `theory` or `structure`"));
                self.bump();
                while !self.at(&Tok::Eof)
                    && !(self.at_ident("vocabulary") || self.at_ident("theory") || self.at_ident("structure"))
                {
                    self.bump();
                }
                continue;
            };
            let keyword_idx = self.pos;
            self.bump();
            if !self.at(&Tok::LBrace) {
                let found = self.peek().describe();
                let _ = self.fail::<()>(format!("expected `{{` after block keyword, found {found}"));
                continue;
            }
            let open = self.pos;
            let mut depth = 0usize;
            let mut close = None;
            while !self.at(&Tok::Eof) {
                match self.bump() {
                    Tok::LBrace => depth += 1,
                    Tok::RBrace => {
                        depth -= 1;
                        if depth == 0 {
                            close = Some(self.pos - 1);
                            break;
                        }
                    }
                    _ => {}
                }
            }
            let close = match close {
                Some(c) => c,
                None => {
                    let span = self.span_of(open);
                    self.diags.push(ParseDiagnostic::error("unclosed block: missing `}`", span));
                    self.pos
                }
            };
            if seen.contains(&kind) {
                let span = self.span_of(keyword_idx);
                self.diags.push(ParseDiagnostic::error("duplicate block", span));
                continue;
            }
            seen.push(kind);
            blocks.push((kind, open + 1, close));
        }

        let mut kb = KnowledgeBase::default();
        blocks.sort_by_key(|(k, _, _)| *k != BlockKind::Vocabulary);
        for (kind, start, end) in blocks {
            self.pos = start;
            match kind {
                BlockKind::Vocabulary => {
                    while self.pos < end {
                        if self.vocab_decl().is_err() {
                            self.recover(end);
                        }
                    }
                    kb.vocabulary = self.voc.clone();
                }
                BlockKind::Theory => {
                    while self.pos < end {
                        match self.theory_decl(kb.theory.formulas.len()) {
                            Ok(f) => kb.theory.formulas.push(f),
                            Err(_) => self.recover(end),
                        }
                    }
                }
                BlockKind::Structure => {
                    while self.pos < end {
                        match self.structure_decl() {
                            Ok(a) => kb.structure.assignments.push(a),
                            Err(_) => self.recover(end),
                        }
                    }
                }
            }
        }
        kb
    }

    /// Skips to just past the next `.` at bracket depth zero, or to `end`.
    fn recover(&mut self, end: usize) {
        let mut depth = 0i32;
        while self.pos < end && !self.at(&Tok::Eof) {
            match self.bump() {
                Tok::LParen | Tok::LBracket | Tok::LBrace => depth += 1,
                Tok::RParen | Tok::RBracket | Tok::RBrace => depth -= 1,
                Tok::Dot if depth <= 0 => return,
                _ => {}
            }
        }
        self.pos = self.pos.max(end);
    }

    fn annotations(&mut self, allowed: &[&str]) -> PResult<Vec<Annotation>> {
        let mut out = Vec::new();
        while self.at(&Tok::At) {
            self.bump();
            let span = self.span();
            let name = self.ident()?;
            if !allowed.contains(&name.as_str()) {
                self.diags.push(ParseDiagnostic::error(format!("annotation `@{name}` is not allowed here"), span));
                return Err(Fail);
            }
            self.expect(&Tok::LParen)?;
            let arg = match self.bump() {
                Tok::Str(s) | Tok::Ident(s) => s,
                other => return self.fail(format!("expected annotation argument, found {}", other.describe())),
            };
            self.expect(&Tok::RParen)?;
            out.push(Annotation { name, arg, span });
        }
        Ok(out)
    }

    fn signed_number(&mut self) -> PResult<Rat> {
        let negative = self.eat(&Tok::Minus);
        let n = match self.bump() {
            Tok::Number(n) => Rat::parse(&n).expect("lexer produces valid decimals"),
            other => return self.fail(format!("expected number, found {}", other.describe())),
        };
        let n = if self.at(&Tok::Slash) && matches!(self.peek_at(1), Tok::Number(_)) {
            self.bump();
            let Tok::Number(d) = self.bump() else { unreachable!() };
            let d = Rat::parse(&d).expect("lexer produces valid decimals");
            if d.is_zero() {
                return self.fail("zero denominator");
            }
            n / d
        } else {
            n
        };
        Ok(if negative { -n } else { n })
    }

    fn vocab_decl(&mut self) -> PResult<()> {
        let anns = self.annotations(&["label", "category"])?;
        if self.at_ident("type") && matches!(self.peek_at(1), Tok::Ident(_)) && self.peek_at(2) == &Tok::Define {
            if let Some(a) = anns.first() {
                self.diags.push(ParseDiagnostic::error("type declarations take no annotations", a.span.clone()));
            }
            self.bump();
            let name = self.ident()?;
            self.expect(&Tok::Define)?;
            let kind = self.type_def()?;
            self.expect(&Tok::Dot)?;
            self.voc.types.push(TypeDecl { name, kind });
            return Ok(());
        }
        let name = self.ident()?;
        self.expect(&Tok::Colon)?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            self.expect(&Tok::RParen)?;
        } else {
            args.push(self.ident()?);
            while self.eat(&Tok::Star) {
                args.push(self.ident()?);
            }
        }
        self.expect(&Tok::Arrow)?;
        let result = self.ident()?;
        self.expect(&Tok::Dot)?;
        let mut decl = SymbolDecl { name, args, result, category: Category::default(), label: None };
        for a in anns {
            match a.name.as_str() {
                "label" => decl.label = Some(a.arg),
                _ => match Category::from_name(&a.arg) {
                    Some(c) => decl.category = c,
                    None => {
                        self.diags.push(ParseDiagnostic::error(format!("unknown category `{}`", a.arg), a.span));
                        return Err(Fail);
                    }
                },
            }
        }
        self.voc.symbols.push(decl);
        Ok(())
    }

    fn type_def(&mut self) -> PResult<TypeKind> {
        match self.peek().clone() {
            Tok::LBrace => {
                self.bump();
                let mut cs = vec![self.ident()?];
                while self.eat(&Tok::Comma) {
                    cs.push(self.ident()?);
                }
                self.expect(&Tok::RBrace)?;
                Ok(TypeKind::Enum(cs))
            }
            Tok::Ident(w) if w == "bool" => {
                self.bump();
                Ok(TypeKind::Bool)
            }
            Tok::Ident(w) if w == "int" || w == "real" => {
                self.bump();
                self.expect(&Tok::LBracket)?;
                let lo_span = self.span();
                let lo = self.signed_number()?;
                self.expect(&Tok::DotDot)?;
                let hi_span = self.span();
                let hi = self.signed_number()?;
                self.expect(&Tok::RBracket)?;
                if w == "int" {
                    let (Some(l), Some(h)) = (lo.to_i64(), hi.to_i64()) else {
                        let span = if lo.is_integer() { hi_span } else { lo_span };
                        self.diags.push(ParseDiagnostic::error("integer bounds expected", span));
                        return Err(Fail);
                    };
                    Ok(TypeKind::Int { lo: l, hi: h })
                } else {
                    Ok(TypeKind::Real { lo, hi })
                }
            }
            other => {
                self.fail(format!("expected `{{...}}`, `int[..]`, `real[..]` or `bool`, found {}", other.describe()))
            }
        }
    }

    fn theory_decl(&mut self, index: usize) -> PResult<LabeledFormula> {
        let start = self.span();
        let anns = self.annotations(&["id", "label"])?;
        self.scope.clear();
        let formula = self.formula()?;
        self.expect(&Tok::Dot)?;
        let mut id = None;
        let mut label = None;
        for a in anns {
            match a.name.as_str() {
                "id" => id = Some(a.arg),
                _ => label = Some(a.arg),
            }
        }
        let id = id.unwrap_or_else(|| format!("f{}", index + 1));
        let label = match label {
            Some(l) => l,
            None => {
                self.diags.push(ParseDiagnostic::warning(format!("formula `{id}` has no @label"), start));
                id.clone()
            }
        };
        Ok(LabeledFormula { id, label, formula })
    }

    fn literal_value(&mut self) -> PResult<Value> {
        match self.peek().clone() {
            Tok::Ident(w) if w == "true" => {
                self.bump();
                Ok(Value::Bool(true))
            }
            Tok::Ident(w) if w == "false" => {
                self.bump();
                Ok(Value::Bool(false))
            }
            Tok::Ident(w) => {
                self.bump();
                Ok(Value::Sym(w))
            }
            Tok::Number(_) | Tok::Minus => Ok(Value::Num(self.signed_number()?)),
            other => self.fail(format!("expected a value, found {}", other.describe())),
        }
    }

    fn structure_decl(&mut self) -> PResult<Assignment> {
        let anns = self.annotations(&["origin"])?;
        let mut origin = Origin::Given;
        for a in anns {
            origin = match a.arg.as_str() {
                "user" => Origin::User,
                "given" => Origin::Given,
                "propagated" => Origin::Propagated,
                _ => {
                    self.diags.push(ParseDiagnostic::error(format!("unknown origin `{}`", a.arg), a.span));
                    return Err(Fail);
                }
            };
        }
        let symbol = self.ident()?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            if !self.at(&Tok::RParen) {
                args.push(self.literal_value()?);
                while self.eat(&Tok::Comma) {
                    args.push(self.literal_value()?);
                }
            }
            self.expect(&Tok::RParen)?;
        }
        let key = Key { symbol, args };
        let value = if self.eat(&Tok::Eq) {
            Restriction::Exact(self.literal_value()?)
        } else if self.at_ident("in") {
            self.bump();
            Restriction::Within(self.interval()?)
        } else if self.at(&Tok::Dot) {
            Restriction::Exact(Value::Bool(true))
        } else {
            let found = self.peek().describe();
            return self.fail(format!("expected `=`, `in` or `.`, found {found}"));
        };
        self.expect(&Tok::Dot)?;
        Ok(Assignment { key, value, origin })
    }

    fn interval(&mut self) -> PResult<Interval> {
        let lo_open = match self.bump() {
            Tok::LBracket => false,
            Tok::LParen => true,
            other => return self.fail(format!("expected `[` or `(`, found {}", other.describe())),
        };
        let lo = if self.at(&Tok::DotDot) { None } else { Some(self.signed_number()?) };
        self.expect(&Tok::DotDot)?;
        let hi = if matches!(self.peek(), Tok::RBracket | Tok::RParen) { None } else { Some(self.signed_number()?) };
        let hi_open = match self.bump() {
            Tok::RBracket => false,
            Tok::RParen => true,
            other => return self.fail(format!("expected `]` or `)`, found {}", other.describe())),
        };
        Ok(Interval {
            lo: lo.map(|value| Bound { value, strict: lo_open }),
            hi: hi.map(|value| Bound { value, strict: hi_open }),
        })
    }

    // -- formulas ---------------------------------------------------------

    pub(crate) fn formula(&mut self) -> PResult<Formula> {
        if matches!(self.peek(), Tok::Forall | Tok::Exists) {
            return self.quantified();
        }
        self.equiv()
    }

    fn quantified(&mut self) -> PResult<Formula> {
        let universal = matches!(self.bump(), Tok::Forall);
        let mut vars = Vec::new();
        loop {
            let v = self.ident()?;
            if !self.at_ident("in") {
                let found = self.peek().describe();
                return self.fail(format!("expected `in`, found {found}"));
            }
            self.bump();
            let ty = self.ident()?;
            vars.push((v, ty));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Colon)?;
        let depth = self.scope.len();
        self.scope.extend(vars.iter().map(|(v, _)| v.clone()));
        let body = self.formula();
        self.scope.truncate(depth);
        let mut f = body?;
        for (v, ty) in vars.into_iter().rev() {
            f = if universal { Formula::Forall(v, ty, Box::new(f)) } else { Formula::Exists(v, ty, Box::new(f)) };
        }
        Ok(f)
    }

    fn equiv(&mut self) -> PResult<Formula> {
        let mut f = self.implication()?;
        while self.eat(&Tok::Equiv) {
            let rhs = self.implication_or_quant()?;
            f = Formula::Equiv(Box::new(f), Box::new(rhs));
        }
        Ok(f)
    }

    fn implication_or_quant(&mut self) -> PResult<Formula> {
        if matches!(self.peek(), Tok::Forall | Tok::Exists) {
            self.quantified()
        } else {
            self.implication()
        }
    }

    fn implication(&mut self) -> PResult<Formula> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs =
                if matches!(self.peek(), Tok::Forall | Tok::Exists) { self.quantified()? } else { self.implication()? };
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Formula> {
        let first = self.conjunction()?;
        if !self.at(&Tok::Or) {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat(&Tok::Or) {
            parts.push(self.conjunction()?);
        }
        Ok(Formula::Or(parts))
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let first = self.negation()?;
        if !self.at(&Tok::And) {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat(&Tok::And) {
            parts.push(self.negation()?);
        }
        Ok(Formula::And(parts))
    }

    fn negation(&mut self) -> PResult<Formula> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::Not(Box::new(self.negation()?)))
            }
            Tok::Forall | Tok::Exists => self.quantified(),
            Tok::LParen => {
                // `(` opens either a parenthesized formula or a term such as
                // `(a + b) < c`; try the comparison reading first.
                let (pos, ndiag) = (self.pos, self.diags.len());
                if let Ok(f) = self.comparison() {
                    return Ok(f);
                }
                self.pos = pos;
                self.diags.truncate(ndiag);
                self.bump();
                let f = self.formula()?;
                self.expect(&Tok::RParen)?;
                Ok(f)
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> PResult<Formula> {
        let lhs = self.term()?;
        let op = match self.peek() {
            Tok::Eq => Some(CmpOp::Eq),
            Tok::Ne => Some(CmpOp::Ne),
            Tok::Le => Some(CmpOp::Le),
            Tok::Lt => Some(CmpOp::Lt),
            Tok::Ge => Some(CmpOp::Ge),
            Tok::Gt => Some(CmpOp::Gt),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let rhs = self.term()?;
            return Ok(Formula::Cmp(op, lhs, rhs));
        }
        Ok(match lhs {
            Term::Const(Value::Bool(b)) => Formula::Bool(b),
            t => Formula::Pred(t),
        })
    }

    // -- terms ------------------------------------------------------------

    pub(crate) fn term(&mut self) -> PResult<Term> {
        let mut t = self.product()?;
        loop {
            if self.eat(&Tok::Plus) {
                let rhs = self.product()?;
                t = Term::Add(Box::new(t), Box::new(rhs));
            } else if self.eat(&Tok::Minus) {
                let rhs = self.product()?;
                t = Term::Sub(Box::new(t), Box::new(rhs));
            } else {
                return Ok(t);
            }
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut t = self.unary_term()?;
        loop {
            if self.eat(&Tok::Star) {
                let rhs = self.unary_term()?;
                t = Term::Mul(Box::new(t), Box::new(rhs));
            } else if self.eat(&Tok::Slash) {
                let rhs = self.unary_term()?;
                t = match (t, rhs) {
                    (Term::Const(Value::Num(a)), Term::Const(Value::Num(b))) if !b.is_zero() => {
                        Term::Const(Value::Num(a / b))
                    }
                    (a, b) => Term::Div(Box::new(a), Box::new(b)),
                };
            } else {
                return Ok(t);
            }
        }
    }

    fn unary_term(&mut self) -> PResult<Term> {
        if self.eat(&Tok::Minus) {
            return Ok(match self.unary_term()? {
                Term::Const(Value::Num(n)) => Term::Const(Value::Num(-n)),
                t => Term::Neg(Box::new(t)),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Term::Const(Value::Num(Rat::parse(&n).expect("lexer produces valid decimals"))))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.at(&Tok::RParen) {
                        args.push(self.term()?);
                        while self.eat(&Tok::Comma) {
                            args.push(self.term()?);
                        }
                    }
                    self.expect(&Tok::RParen)?;
                    return Ok(Term::App(name, args));
                }
                Ok(self.resolve(name))
            }
            other => self.fail(format!("expected a term, found {}", other.describe())),
        }
    }

    fn resolve(&self, name: String) -> Term {
        if self.scope.contains(&name) {
            Term::Var(name)
        } else if name == "true" {
            Term::Const(Value::Bool(true))
        } else if name == "false" {
            Term::Const(Value::Bool(false))
        } else if self.voc.symbol(&name).is_some() {
            Term::App(name, Vec::new())
        } else {
            Term::Const(Value::Sym(name))
        }
    }
}
