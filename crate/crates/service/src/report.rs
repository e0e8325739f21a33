//! Deterministic plain-text rendering of views and explanations.

use std::fmt::Write;

use kbsel::consultant::{OptimizeResponse, StateView, WireAssignment, WireExplanation, WireInterval};
use kbsel::solve::Status;
use kbsel::Origin;

fn location(symbol: &str, args: &[String]) -> String {
    if args.is_empty() {
        symbol.to_string()
    } else {
        format!("{symbol}({})", args.join(", "))
    }
}

pub fn interval(iv: &WireInterval) -> String {
    format!(
        "{}{}, {}{}",
        if iv.lo_strict { '(' } else { '[' },
        iv.lo.as_deref().unwrap_or("-inf"),
        iv.hi.as_deref().unwrap_or("inf"),
        if iv.hi_strict { ')' } else { ']' }
    )
}

fn origin(o: Origin) -> &'static str {
    match o {
        Origin::User => "user",
        Origin::Propagated => "propagated",
        Origin::Given => "given",
    }
}

pub fn assignment(a: &WireAssignment) -> String {
    let loc = location(&a.symbol, &a.args);
    match (&a.value, &a.bounds) {
        (Some(v), _) => format!("{loc} = {v}"),
        (None, Some(iv)) => format!("{loc} in {}", interval(iv)),
        (None, None) => loc,
    }
}

pub fn view(v: &StateView) -> String {
    let mut out = String::new();
    let status = match v.status {
        Status::Consistent => "consistent",
        Status::Inconsistent => "inconsistent",
    };
    let _ = writeln!(out, "status: {status}");
    let _ = writeln!(out, "remaining: {}", v.remaining.count);
    for id in &v.remaining.ids {
        let _ = writeln!(out, "  {id}");
    }
    out.push_str("values:\n");
    for t in &v.tiles {
        let loc = location(&t.symbol, &t.args);
        match (&t.value, t.origin, &t.bounds) {
            (Some(value), Some(o), _) => {
                let _ = writeln!(out, "  {loc} = {value} [{}]", origin(o));
            }
            (None, _, Some(iv)) => {
                let _ = writeln!(out, "  {loc} in {}", interval(iv));
            }
            _ => {}
        }
    }
    let irrelevant: Vec<String> =
        v.tiles.iter().filter(|t| !t.relevant).map(|t| location(&t.symbol, &t.args)).collect();
    if !irrelevant.is_empty() {
        let _ = writeln!(out, "irrelevant: {}", irrelevant.join(", "));
    }
    if let Some(e) = &v.inconsistency {
        out.push_str(&explanation(e));
    }
    out
}

pub fn explanation(e: &WireExplanation) -> String {
    let mut out = String::new();
    match &e.target {
        Some(t) => {
            let _ = writeln!(out, "explanation of {}:", assignment(t));
        }
        None => out.push_str("inconsistency core:\n"),
    }
    for a in &e.assignments {
        let _ = writeln!(out, "  choice {}  ({})", assignment(a), a.label);
    }
    for l in &e.laws {
        let _ = writeln!(out, "  law {}: {}", l.id, l.label);
    }
    out
}

pub fn optimum(r: &OptimizeResponse) -> String {
    let mut out = String::new();
    if let Some(a) = &r.adhesive {
        let _ = writeln!(out, "adhesive: {a}");
    }
    let _ = writeln!(out, "{}: {}", r.symbol, r.value);
    out.push_str("model:\n");
    for a in &r.model {
        let _ = writeln!(out, "  {}", assignment(a));
    }
    out
}
