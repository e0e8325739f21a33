//! Brute-force reference semantics: enumerate every total interpretation of
//! a small finite vocabulary and evaluate formulas directly on it.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use kbsel::{
    Assignment, CmpOp, Formula, Key, Origin, PartialStructure, Rat, Restriction, SymbolDecl, Term, Theory, TypeDecl,
    Value, Vocabulary,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Model = BTreeMap<Key, Value>;

pub fn cells(voc: &Vocabulary) -> Vec<(Key, Vec<Value>)> {
    let mut out = Vec::new();
    for s in &voc.symbols {
        let result = voc.type_decl(&s.result).unwrap().values().expect("finite result type");
        let mut tuples: Vec<Vec<Value>> = vec![Vec::new()];
        for a in &s.args {
            let vals = voc.type_decl(a).unwrap().values().unwrap();
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    vals.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(v.clone());
                        t
                    })
                })
                .collect();
        }
        for args in tuples {
            out.push((Key::new(&s.name, args), result.clone()));
        }
    }
    out
}

pub fn model_count(voc: &Vocabulary) -> u128 {
    cells(voc).iter().map(|(_, v)| v.len() as u128).product()
}

/// Every total model of `th` that agrees with the exact assignments of `st`.
pub fn models(voc: &Vocabulary, th: &Theory, st: &PartialStructure) -> Vec<Model> {
    let cells = cells(voc);
    let mut out = Vec::new();
    let mut idx = vec![0usize; cells.len()];
    loop {
        let m: Model = cells.iter().zip(&idx).map(|((k, vals), &i)| (k.clone(), vals[i].clone())).collect();
        let fits = st.iter().all(|a| match &a.value {
            Restriction::Exact(v) => &m[&a.key] == v,
            Restriction::Within(iv) => m[&a.key].as_num().is_some_and(|x| iv.contains(x)),
        });
        if fits && th.formulas.iter().all(|f| holds(voc, &m, &f.formula, &mut Vec::new())) {
            out.push(m);
        }
        let mut k = 0;
        loop {
            if k == cells.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < cells[k].1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn term(voc: &Vocabulary, m: &Model, t: &Term, env: &mut Vec<(String, Value)>) -> Value {
    let num = |v: Value| match v {
        Value::Num(n) => n,
        other => panic!("not a number: {other}"),
    };
    match t {
        Term::Var(x) => env.iter().rev().find(|(n, _)| n == x).unwrap().1.clone(),
        Term::Const(v) => v.clone(),
        Term::App(f, args) => {
            if args.is_empty() && voc.symbol(f).is_none() {
                return Value::sym(f);
            }
            let args = args.iter().map(|a| term(voc, m, a, env)).collect();
            m[&Key::new(f, args)].clone()
        }
        Term::Neg(a) => Value::Num(-num(term(voc, m, a, env))),
        Term::Add(a, b) => Value::Num(num(term(voc, m, a, env)) + num(term(voc, m, b, env))),
        Term::Sub(a, b) => Value::Num(num(term(voc, m, a, env)) - num(term(voc, m, b, env))),
        Term::Mul(a, b) => Value::Num(num(term(voc, m, a, env)) * num(term(voc, m, b, env))),
        Term::Div(a, b) => {
            let x = num(term(voc, m, a, env));
            let y = num(term(voc, m, b, env));
            Value::Num(if y.is_zero() { Rat::zero() } else { x / y })
        }
    }
}

pub fn holds(voc: &Vocabulary, m: &Model, f: &Formula, env: &mut Vec<(String, Value)>) -> bool {
    match f {
        Formula::Bool(b) => *b,
        Formula::Pred(t) => term(voc, m, t, env) == Value::Bool(true),
        Formula::Cmp(op, a, b) => {
            let x = term(voc, m, a, env);
            let y = term(voc, m, b, env);
            match (op, &x, &y) {
                (CmpOp::Eq, _, _) => x == y,
                (CmpOp::Ne, _, _) => x != y,
                (_, Value::Num(p), Value::Num(q)) => op.holds(p.cmp(q)),
                _ => panic!("ordering on non-numbers"),
            }
        }
        Formula::Not(g) => !holds(voc, m, g, env),
        Formula::And(v) => v.iter().all(|g| holds(voc, m, g, env)),
        Formula::Or(v) => v.iter().any(|g| holds(voc, m, g, env)),
        Formula::Implies(a, b) => !holds(voc, m, a, env) || holds(voc, m, b, env),
        Formula::Equiv(a, b) => holds(voc, m, a, env) == holds(voc, m, b, env),
        Formula::Forall(x, ty, body) | Formula::Exists(x, ty, body) => {
            let vals = voc.type_decl(ty).unwrap().values().unwrap();
            let universal = matches!(f, Formula::Forall(..));
            for v in vals {
                env.push((x.clone(), v));
                let r = holds(voc, m, body, env);
                env.pop();
                if r != universal {
                    return !universal;
                }
            }
            universal
        }
    }
}

/// Per-cell values used by some model.
pub fn projection(ms: &[Model]) -> BTreeMap<Key, BTreeSet<Value>> {
    let mut out: BTreeMap<Key, BTreeSet<Value>> = BTreeMap::new();
    for m in ms {
        for (k, v) in m {
            out.entry(k.clone()).or_default().insert(v.clone());
        }
    }
    out
}

// -- random knowledge bases ------------------------------------------------

pub struct RandomKb {
    pub vocabulary: Vocabulary,
    pub theory: Theory,
    pub structure: PartialStructure,
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    voc: &'a Vocabulary,
    vars: Vec<String>,
    fresh: usize,
}

impl Gen<'_> {
    fn syms(&self, result: &str, arity: usize) -> Vec<String> {
        self.voc
            .symbols
            .iter()
            .filter(|s| s.result == result && s.args.len() == arity)
            .map(|s| s.name.clone())
            .collect()
    }

    fn enum_term(&mut self, depth: u32) -> Term {
        let mut opts: Vec<Term> = vec![Term::constant(["e1", "e2"][self.rng.gen_range(0..2)])];
        for s in self.syms("E", 0) {
            opts.push(Term::sym(&s));
        }
        for x in &self.vars {
            opts.push(Term::var(x));
        }
        if depth > 0 {
            for name in self.syms("E", 1) {
                let arg = self.enum_term(depth - 1);
                opts.push(Term::app(&name, vec![arg]));
            }
        }
        opts.choose(self.rng).unwrap().clone()
    }

    fn num_term(&mut self, depth: u32) -> Term {
        let choice = self.rng.gen_range(0..if depth == 0 { 3 } else { 8 });
        match choice {
            0 => Term::int(self.rng.gen_range(-1..4)),
            1 | 2 => {
                let s0 = self.syms("N", 0);
                let s1 = self.syms("N", 1);
                if !s1.is_empty() && (s0.is_empty() || self.rng.gen_bool(0.5)) {
                    let f = s1.choose(self.rng).unwrap().clone();
                    let arg = self.enum_term(depth.saturating_sub(1));
                    Term::app(&f, vec![arg])
                } else if let Some(s) = s0.choose(self.rng) {
                    Term::sym(s)
                } else {
                    Term::int(1)
                }
            }
            3 | 4 => Term::Add(Box::new(self.num_term(depth - 1)), Box::new(self.num_term(depth - 1))),
            5 => Term::Sub(Box::new(self.num_term(depth - 1)), Box::new(self.num_term(depth - 1))),
            6 => Term::Mul(Box::new(Term::int(self.rng.gen_range(-2..3))), Box::new(self.num_term(depth - 1))),
            _ => {
                let d = self.num_term(0);
                let d = if matches!(d, Term::Const(_)) { Term::int(2) } else { d };
                Term::Div(Box::new(self.num_term(depth - 1)), Box::new(d))
            }
        }
    }

    fn atom(&mut self, depth: u32) -> Formula {
        match self.rng.gen_range(0..5) {
            0 => {
                let ps = self.syms("Bool", 0);
                match ps.choose(self.rng) {
                    Some(p) => Formula::pred(p, vec![]),
                    None => Formula::Bool(self.rng.gen_bool(0.8)),
                }
            }
            1 => {
                let qs = self.syms("Bool", 1);
                match qs.choose(self.rng) {
                    Some(q) => {
                        let a = self.enum_term(depth);
                        Formula::pred(q, vec![a])
                    }
                    None => Formula::Bool(true),
                }
            }
            2 => {
                let op = [CmpOp::Eq, CmpOp::Ne][self.rng.gen_range(0..2)];
                Formula::cmp(op, self.enum_term(depth), self.enum_term(depth))
            }
            _ => {
                let op = [CmpOp::Eq, CmpOp::Ne, CmpOp::Le, CmpOp::Lt, CmpOp::Ge, CmpOp::Gt][self.rng.gen_range(0..6)];
                Formula::cmp(op, self.num_term(depth), self.num_term(depth))
            }
        }
    }

    fn formula(&mut self, depth: u32) -> Formula {
        if depth == 0 {
            return self.atom(1);
        }
        match self.rng.gen_range(0..9) {
            0 | 1 => self.atom(2),
            2 => Formula::not(self.formula(depth - 1)),
            3 => Formula::And(vec![self.formula(depth - 1), self.formula(depth - 1)]),
            4 => Formula::Or(vec![self.formula(depth - 1), self.formula(depth - 1)]),
            5 => Formula::implies(self.formula(depth - 1), self.formula(depth - 1)),
            6 => Formula::equiv(self.formula(depth - 1), self.formula(depth - 1)),
            _ => {
                self.fresh += 1;
                let x = format!("x{}", self.fresh);
                self.vars.push(x.clone());
                let body = self.formula(depth - 1);
                self.vars.pop();
                if self.rng.gen_bool(0.5) {
                    Formula::forall(&x, "E", body)
                } else {
                    Formula::exists(&x, "E", body)
                }
            }
        }
    }
}

/// A random finite KB with at most `max_models` total interpretations and
/// a few random user assignments.
pub fn random_kb(rng: &mut ChaCha8Rng, max_models: u128) -> RandomKb {
    loop {
        let mut voc = Vocabulary::new();
        let e_size = rng.gen_range(2..4);
        let consts: Vec<String> = (1..=e_size).map(|i| format!("e{i}")).collect();
        voc.types.push(TypeDecl::enumeration("E", &consts.iter().map(String::as_str).collect::<Vec<_>>()));
        voc.types.push(TypeDecl::int("N", 0, rng.gen_range(1..4)));
        let pool = [
            SymbolDecl::new("A", &[], "E"),
            SymbolDecl::new("B", &[], "E"),
            SymbolDecl::new("P", &[], "Bool"),
            SymbolDecl::new("R", &[], "Bool"),
            SymbolDecl::new("Q", &["E"], "Bool"),
            SymbolDecl::new("Nx", &[], "N"),
            SymbolDecl::new("Ny", &[], "N"),
            SymbolDecl::new("F", &["E"], "N"),
            SymbolDecl::new("G", &["E"], "E"),
        ];
        for s in pool {
            if rng.gen_bool(0.6) {
                voc.symbols.push(s);
            }
        }
        if voc.symbols.is_empty() || voc.symbols.len() > 6 || model_count(&voc) > max_models {
            continue;
        }
        let mut th = Theory::new();
        let n = rng.gen_range(1..5);
        for i in 0..n {
            let mut g = Gen { rng, voc: &voc, vars: Vec::new(), fresh: 0 };
            let depth = g.rng.gen_range(1..4);
            let f = g.formula(depth);
            th.push(&format!("law{i}"), &format!("law {i}"), f);
        }
        let mut st = PartialStructure::new();
        let all = cells(&voc);
        for _ in 0..rng.gen_range(0..3) {
            let (k, vals) = all.choose(rng).unwrap();
            if st.iter().any(|a| &a.key == k) {
                continue;
            }
            let v = vals.choose(rng).unwrap().clone();
            st.push(Assignment { key: k.clone(), value: Restriction::Exact(v), origin: Origin::User });
        }
        return RandomKb { vocabulary: voc, theory: th, structure: st };
    }
}
