use std::fmt::Write;

use crate::model::{
    Assignment, Category, CmpOp, Formula, Interval, Origin, PartialStructure, Restriction, Term, Theory, TypeKind,
    Value, Vocabulary,
};
use crate::rational::Rat;

/// Renders a knowledge base in the canonical textual form. The output parses
/// back to equal values and is stable across runs.
pub fn serialize(voc: &Vocabulary, th: &Theory, st: &PartialStructure) -> String {
    let mut out = String::new();
    out.push_str("vocabulary {\n");
    for t in &voc.types {
        let def = match &t.kind {
            TypeKind::Enum(cs) => format!("{{{}}}", cs.join(", ")),
            TypeKind::Int { lo, hi } => format!("int[{lo}..{hi}]"),
            TypeKind::Real { lo, hi } => format!("real[{}..{}]", bare_number(lo), bare_number(hi)),
            TypeKind::Bool => "bool".to_string(),
        };
        let _ = writeln!(out, "    type {} := {}.", t.name, def);
    }
    for s in &voc.symbols {
        out.push_str("    ");
        if let Some(label) = &s.label {
            let _ = write!(out, "@label({}) ", quote(label));
        }
        if s.category != Category::default() {
            let _ = write!(out, "@category({}) ", s.category.name());
        }
        let args = if s.args.is_empty() { "()".to_string() } else { s.args.join(" * ") };
        let _ = writeln!(out, "{} : {} -> {}.", s.name, args, s.result);
    }
    out.push_str("}\n\ntheory {\n");
    for f in &th.formulas {
        let id = if is_identifier(&f.id) { f.id.clone() } else { quote(&f.id) };
        let _ = writeln!(out, "    @id({}) @label({})", id, quote(&f.label));
        let _ = writeln!(out, "    {}.", write_formula(&f.formula));
    }
    out.push_str("}\n\nstructure {\n");
    for a in st.iter() {
        let _ = writeln!(out, "    {}", write_assignment(a));
    }
    out.push_str("}\n");
    out
}

pub(crate) fn write_assignment(a: &Assignment) -> String {
    let mut out = String::new();
    match a.origin {
        Origin::Given => {}
        Origin::User => out.push_str("@origin(user) "),
        Origin::Propagated => out.push_str("@origin(propagated) "),
    }
    out.push_str(&a.key.symbol);
    if !a.key.args.is_empty() {
        let args: Vec<String> = a.key.args.iter().map(write_value).collect();
        let _ = write!(out, "({})", args.join(", "));
    }
    match &a.value {
        Restriction::Exact(v) => {
            let _ = write!(out, " = {}.", write_value(v));
        }
        Restriction::Within(iv) => {
            let _ = write!(out, " in {}.", write_interval(iv));
        }
    }
    out
}

fn write_interval(iv: &Interval) -> String {
    let mut out = String::new();
    match &iv.lo {
        Some(b) => {
            out.push(if b.strict { '(' } else { '[' });
            out.push_str(&bare_number(&b.value));
        }
        None => out.push('('),
    }
    out.push_str("..");
    match &iv.hi {
        Some(b) => {
            out.push_str(&bare_number(&b.value));
            out.push(if b.strict { ')' } else { ']' });
        }
        None => out.push(')'),
    }
    out
}

fn write_value(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Sym(s) => s.clone(),
        Value::Num(n) => bare_number(n),
    }
}

/// `-3`, `0.25` or `1/3`, for positions that read a signed literal.
fn bare_number(n: &Rat) -> String {
    n.to_decimal_string()
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

// Formula precedence, loosest first.
const QUANT: u8 = 0;
const EQUIV: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const NOT: u8 = 5;
const ATOM: u8 = 6;

fn level(f: &Formula) -> u8 {
    match f {
        Formula::Forall(..) | Formula::Exists(..) => QUANT,
        Formula::Equiv(..) => EQUIV,
        Formula::Implies(..) => IMPLIES,
        Formula::Or(v) if v.len() >= 2 => OR,
        Formula::And(v) if v.len() >= 2 => AND,
        // Degenerate connectives have no concrete syntax of their own.
        Formula::Or(v) | Formula::And(v) if v.len() == 1 => level(&v[0]),
        Formula::Not(_) => NOT,
        _ => ATOM,
    }
}

pub fn write_formula(f: &Formula) -> String {
    let mut out = String::new();
    formula(&mut out, f, QUANT);
    out
}

/// Writes `f`, parenthesized unless its own level is strictly above `min`
/// (or equal to `min` when `min` is the quantifier level).
fn formula(out: &mut String, f: &Formula, min: u8) {
    let lv = level(f);
    let paren = lv < min;
    if paren {
        out.push('(');
    }
    match f {
        Formula::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Formula::Pred(t) => term(out, t, 0),
        Formula::Cmp(op, a, b) => {
            term(out, a, 0);
            let _ = write!(out, " {} ", cmp_text(*op));
            term(out, b, 0);
        }
        Formula::Not(g) => {
            out.push('~');
            formula(out, g, NOT);
        }
        Formula::And(v) | Formula::Or(v) if v.is_empty() => {
            out.push_str(if matches!(f, Formula::And(_)) { "true" } else { "false" });
        }
        Formula::And(v) | Formula::Or(v) if v.len() == 1 => formula(out, &v[0], min),
        Formula::And(v) | Formula::Or(v) => {
            let (sep, lv) = if matches!(f, Formula::And(_)) { (" & ", AND) } else { (" | ", OR) };
            for (i, g) in v.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                // A nested connective of the same kind would be flattened.
                formula(out, g, lv + 1);
            }
        }
        Formula::Implies(a, b) => {
            formula(out, a, OR);
            out.push_str(" => ");
            formula(out, b, IMPLIES);
        }
        Formula::Equiv(a, b) => {
            formula(out, a, EQUIV);
            out.push_str(" <=> ");
            formula(out, b, IMPLIES);
        }
        Formula::Forall(v, t, body) | Formula::Exists(v, t, body) => {
            let q = if matches!(f, Formula::Forall(..)) { '!' } else { '?' };
            let _ = write!(out, "{q}{v} in {t}: ");
            formula(out, body, QUANT);
        }
    }
    if paren {
        out.push(')');
    }
}

fn cmp_text(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "=",
        CmpOp::Ne => "~=",
        CmpOp::Le => "=<",
        CmpOp::Lt => "<",
        CmpOp::Ge => ">=",
        CmpOp::Gt => ">",
    }
}

pub fn write_term(t: &Term) -> String {
    let mut out = String::new();
    term(&mut out, t, 0);
    out
}

// Term precedence: 1 additive, 2 multiplicative, 3 unary minus, 4 atoms.
fn term_level(t: &Term) -> u8 {
    match t {
        Term::Add(..) | Term::Sub(..) => 1,
        Term::Mul(..) | Term::Div(..) => 2,
        Term::Neg(_) => 3,
        Term::Const(Value::Num(n)) if n.is_negative() => 3,
        _ => 4,
    }
}

fn term(out: &mut String, t: &Term, min: u8) {
    let paren = term_level(t) < min;
    if paren {
        out.push('(');
    }
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Const(Value::Num(n)) => {
            let s = n.to_decimal_string();
            if s.contains('/') {
                let _ = write!(out, "({s})");
            } else {
                out.push_str(&s);
            }
        }
        Term::Const(v) => out.push_str(&write_value(v)),
        Term::App(name, args) => {
            out.push_str(name);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    term(out, a, 0);
                }
                out.push(')');
            }
        }
        Term::Neg(a) => {
            out.push('-');
            term(out, a, 4);
        }
        Term::Add(a, b) | Term::Sub(a, b) => {
            term(out, a, 1);
            out.push_str(if matches!(t, Term::Add(..)) { " + " } else { " - " });
            term(out, b, 2);
        }
        Term::Mul(a, b) | Term::Div(a, b) => {
            term(out, a, 2);
            out.push_str(if matches!(t, Term::Mul(..)) { " * " } else { " / " });
            term(out, b, 3);
        }
    }
    if paren {
        out.push(')');
    }
}
