//! Exact reasoning over conjunctions of linear constraints on rational
//! variables, by Fourier–Motzkin elimination.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{Bound, Interval};
use crate::rational::Rat;

pub type Var = usize;

/// `Σ coeff·var + constant`, terms sorted by variable with no zero
/// coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr {
    pub terms: Vec<(Var, Rat)>,
    pub constant: Rat,
}

impl LinExpr {
    pub fn constant(c: Rat) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        LinExpr { terms: vec![(v, Rat::one())], constant: Rat::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, v: Var) -> Option<&Rat> {
        self.terms.binary_search_by_key(&v, |(x, _)| *x).ok().map(|i| &self.terms[i].1)
    }

    /// `self + k·other`
    pub fn add_scaled(&self, other: &LinExpr, k: &Rat) -> LinExpr {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let take_left = j >= other.terms.len() || (i < self.terms.len() && self.terms[i].0 < other.terms[j].0);
            let take_right = i >= self.terms.len() || (j < other.terms.len() && other.terms[j].0 < self.terms[i].0);
            if take_left {
                terms.push(self.terms[i].clone());
                i += 1;
            } else if take_right {
                terms.push((other.terms[j].0, &other.terms[j].1 * k));
                j += 1;
            } else {
                let c = &self.terms[i].1 + &other.terms[j].1 * k;
                if !c.is_zero() {
                    terms.push((self.terms[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        terms.retain(|(_, c)| !c.is_zero());
        LinExpr { terms, constant: &self.constant + &other.constant * k }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        self.add_scaled(other, &Rat::one())
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add_scaled(other, &-Rat::one())
    }

    pub fn scale(&self, k: &Rat) -> LinExpr {
        if k.is_zero() {
            return LinExpr::default();
        }
        LinExpr { terms: self.terms.iter().map(|(v, c)| (*v, c * k)).collect(), constant: &self.constant * k }
    }

    pub fn eval(&self, values: &HashMap<Var, Rat>) -> Option<Rat> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.terms {
            acc = acc + c * values.get(v)?;
        }
        Some(acc)
    }

    /// Replaces `v` by `value`.
    pub fn substitute(&self, v: Var, value: &Rat) -> LinExpr {
        match self.terms.binary_search_by_key(&v, |(x, _)| *x) {
            Ok(i) => {
                let mut terms = self.terms.clone();
                let (_, c) = terms.remove(i);
                LinExpr { terms, constant: &self.constant + &c * value }
            }
            Err(_) => self.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Le,
    Lt,
    Eq,
}

/// `expr rel 0`
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub expr: LinExpr,
    pub rel: Rel,
}

impl Constraint {
    pub fn new(expr: LinExpr, rel: Rel) -> Self {
        Constraint { expr, rel }
    }

    pub fn holds(&self, values: &HashMap<Var, Rat>) -> Option<bool> {
        let v = self.expr.eval(values)?;
        Some(match self.rel {
            Rel::Le => !v.is_positive(),
            Rel::Lt => v.is_negative(),
            Rel::Eq => v.is_zero(),
        })
    }

    /// Constraints bounding `v` to an interval.
    pub fn within(v: Var, iv: &Interval) -> Vec<Constraint> {
        let mut out = Vec::new();
        if let Some(b) = &iv.lo {
            // lo - v <= 0
            let e = LinExpr { terms: vec![(v, -Rat::one())], constant: b.value.clone() };
            out.push(Constraint::new(e, if b.strict { Rel::Lt } else { Rel::Le }));
        }
        if let Some(b) = &iv.hi {
            let e = LinExpr { terms: vec![(v, Rat::one())], constant: -b.value.clone() };
            out.push(Constraint::new(e, if b.strict { Rel::Lt } else { Rel::Le }));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infeasible;

enum Norm {
    True,
    Keep(Constraint),
}

/// Scales so the first coefficient has absolute value one (and is positive
/// for equalities), or decides a constant constraint.
fn normalize(c: Constraint) -> Result<Norm, Infeasible> {
    if c.expr.terms.is_empty() {
        let k = &c.expr.constant;
        let ok = match c.rel {
            Rel::Le => !k.is_positive(),
            Rel::Lt => k.is_negative(),
            Rel::Eq => k.is_zero(),
        };
        return if ok { Ok(Norm::True) } else { Err(Infeasible) };
    }
    let first = c.expr.terms[0].1.clone();
    let scale = if c.rel == Rel::Eq { first.recip() } else { first.abs().recip() };
    if scale == Rat::one() {
        return Ok(Norm::Keep(c));
    }
    Ok(Norm::Keep(Constraint::new(c.expr.scale(&scale), c.rel)))
}

/// A normalized, deduplicated constraint set. For inequalities with equal
/// left-hand sides only the tightest is kept.
#[derive(Default, Clone)]
struct Set {
    ineq: BTreeMap<Vec<(Var, Rat)>, (Rat, Rel)>,
    eq: BTreeSet<LinExpr>,
}

impl Set {
    fn insert(&mut self, c: Constraint) -> Result<(), Infeasible> {
        let c = match normalize(c)? {
            Norm::True => return Ok(()),
            Norm::Keep(c) => c,
        };
        match c.rel {
            Rel::Eq => {
                self.eq.insert(c.expr);
            }
            rel => {
                // terms + k rel 0: a larger k (or strictness) is tighter.
                let LinExpr { terms, constant } = c.expr;
                match self.ineq.get_mut(&terms) {
                    Some((k, r)) => {
                        if constant > *k || (constant == *k && rel == Rel::Lt) {
                            *k = constant;
                            *r = rel;
                        }
                    }
                    None => {
                        self.ineq.insert(terms, (constant, rel));
                    }
                }
            }
        }
        Ok(())
    }

    fn from(cs: impl IntoIterator<Item = Constraint>) -> Result<Set, Infeasible> {
        let mut s = Set::default();
        for c in cs {
            s.insert(c)?;
        }
        Ok(s)
    }

    fn into_vec(self) -> Vec<Constraint> {
        let mut out: Vec<Constraint> = self.eq.into_iter().map(|e| Constraint::new(e, Rel::Eq)).collect();
        out.extend(
            self.ineq.into_iter().map(|(terms, (constant, rel))| Constraint::new(LinExpr { terms, constant }, rel)),
        );
        out
    }
}

/// Eliminates `v` from `cs`, returning an equisatisfiable system over the
/// remaining variables.
fn eliminate(cs: Vec<Constraint>, v: Var) -> Result<Vec<Constraint>, Infeasible> {
    if let Some(i) = cs.iter().position(|c| c.rel == Rel::Eq && c.expr.coeff(v).is_some()) {
        let eq = cs[i].expr.clone();
        let a = eq.coeff(v).expect("present").clone();
        let mut out = Set::default();
        for (j, c) in cs.into_iter().enumerate() {
            if j == i {
                continue;
            }
            match c.expr.coeff(v) {
                Some(b) => {
                    let k = -(b / &a);
                    out.insert(Constraint::new(c.expr.add_scaled(&eq, &k), c.rel))?;
                }
                None => out.insert(c)?,
            }
        }
        return Ok(out.into_vec());
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut out = Set::default();
    for c in cs {
        match c.expr.coeff(v) {
            Some(a) if a.is_positive() => pos.push(c),
            Some(_) => neg.push(c),
            None => out.insert(c)?,
        }
    }
    for p in &pos {
        let ap = p.expr.coeff(v).expect("present").clone();
        for n in &neg {
            let an = n.expr.coeff(v).expect("present").abs();
            // an·p + ap·n cancels v.
            let e = p.expr.scale(&an).add_scaled(&n.expr, &ap);
            let rel = if p.rel == Rel::Lt || n.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
            out.insert(Constraint::new(e, rel))?;
        }
    }
    Ok(out.into_vec())
}

/// Picks the next variable to eliminate: one occurring in an equality if
/// possible, otherwise the one with the fewest generated constraints.
fn choose(cs: &[Constraint], keep: &BTreeSet<Var>) -> Option<Var> {
    let mut counts: BTreeMap<Var, (usize, usize)> = BTreeMap::new();
    for c in cs {
        for (v, a) in &c.expr.terms {
            if keep.contains(v) {
                continue;
            }
            if c.rel == Rel::Eq {
                return Some(*v);
            }
            let e = counts.entry(*v).or_default();
            if a.is_positive() {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    counts.into_iter().min_by_key(|(v, (p, n))| (p * n, *v)).map(|(v, _)| v)
}

/// Projects `cs` onto the variables in `keep`.
fn project_onto(cs: &[Constraint], keep: &BTreeSet<Var>) -> Result<Vec<Constraint>, Infeasible> {
    let mut cur = Set::from(cs.iter().cloned())?.into_vec();
    while let Some(v) = choose(&cur, keep) {
        cur = eliminate(cur, v)?;
    }
    Ok(cur)
}

fn interval_of(cs: &[Constraint], v: Var) -> Result<Interval, Infeasible> {
    let mut iv = Interval { lo: None, hi: None };
    for c in cs {
        let Some(a) = c.expr.coeff(v) else { continue };
        debug_assert_eq!(c.expr.terms.len(), 1);
        // a·v + k rel 0  ⇒  v rel' -k/a
        let bound = -(&c.expr.constant / a);
        let strict = c.rel == Rel::Lt;
        let (lo, hi) = match c.rel {
            Rel::Eq => (Some(Bound::closed(bound.clone())), Some(Bound::closed(bound))),
            _ if a.is_positive() => (None, Some(Bound { value: bound, strict })),
            _ => (Some(Bound { value: bound, strict }), None),
        };
        iv = iv.intersect(&Interval { lo, hi });
    }
    if iv.is_empty() {
        return Err(Infeasible);
    }
    Ok(iv)
}

/// Splits constraints into groups sharing no variables.
pub fn components(cs: &[Constraint]) -> Vec<Vec<Constraint>> {
    let mut parent: HashMap<Var, Var> = HashMap::new();
    fn find(p: &mut HashMap<Var, Var>, v: Var) -> Var {
        let mut r = v;
        while let Some(&q) = p.get(&r) {
            if q == r {
                break;
            }
            r = q;
        }
        p.insert(v, r);
        r
    }
    for c in cs {
        let mut it = c.expr.terms.iter().map(|(v, _)| *v);
        let Some(first) = it.next() else { continue };
        parent.entry(first).or_insert(first);
        for v in it {
            parent.entry(v).or_insert(v);
            let a = find(&mut parent, first);
            let b = find(&mut parent, v);
            if a != b {
                parent.insert(a.max(b), a.min(b));
            }
        }
    }
    let mut groups: BTreeMap<Option<Var>, Vec<Constraint>> = BTreeMap::new();
    for c in cs {
        let root = c.expr.terms.first().map(|(v, _)| find(&mut parent, *v));
        groups.entry(root).or_default().push(c.clone());
    }
    groups.into_values().collect()
}

pub fn feasible(cs: &[Constraint]) -> bool {
    components(cs).iter().all(|g| project_onto(g, &BTreeSet::new()).is_ok())
}

/// Exact range of `v` over the solutions of `cs`, or `Err` if there are none.
/// A variable not mentioned in `cs` is unbounded.
pub fn project(cs: &[Constraint], v: Var) -> Result<Interval, Infeasible> {
    let mut mine = Vec::new();
    for g in components(cs) {
        if g.iter().any(|c| c.expr.coeff(v).is_some()) {
            mine = g;
        } else if project_onto(&g, &BTreeSet::new()).is_err() {
            return Err(Infeasible);
        }
    }
    let keep = BTreeSet::from([v]);
    let rest = project_onto(&mine, &keep)?;
    interval_of(&rest, v)
}

/// Value chosen from an interval: the lower end when it is closed, else a
/// point just inside.
pub fn pick(iv: &Interval) -> Rat {
    match (&iv.lo, &iv.hi) {
        (Some(lo), _) if !lo.strict => lo.value.clone(),
        (Some(lo), Some(hi)) => (&lo.value + &hi.value) / Rat::from_int(2),
        (Some(lo), None) => &lo.value + Rat::one(),
        (None, Some(hi)) if !hi.strict => hi.value.clone(),
        (None, Some(hi)) => &hi.value - Rat::one(),
        (None, None) => Rat::zero(),
    }
}

/// A solution of `cs`, choosing the variables of `order` in turn by
/// [`pick`]; variables outside `order` that occur in `cs` come after it in
/// ascending order.
pub fn witness(cs: &[Constraint], order: &[Var]) -> Result<HashMap<Var, Rat>, Infeasible> {
    let mut all: Vec<Var> = order.to_vec();
    let listed: BTreeSet<Var> = order.iter().copied().collect();
    let mut extra: BTreeSet<Var> = BTreeSet::new();
    for c in cs {
        extra.extend(c.expr.terms.iter().map(|(v, _)| *v).filter(|v| !listed.contains(v)));
    }
    all.extend(extra);

    // systems[k] mentions only all[..=k]
    let mut systems: Vec<Vec<Constraint>> = vec![Vec::new(); all.len()];
    let mut cur = Set::from(cs.iter().cloned())?.into_vec();
    for k in (0..all.len()).rev() {
        systems[k] = cur.clone();
        cur = eliminate(cur, all[k])?;
    }
    // Whatever is left is variable-free and was checked by normalization.
    let mut values = HashMap::new();
    for (k, &v) in all.iter().enumerate() {
        let mut sys = Set::default();
        for c in &systems[k] {
            let mut e = c.expr.clone();
            for (w, _) in c.expr.terms.iter() {
                if *w != v {
                    e = e.substitute(*w, &values[w]);
                }
            }
            sys.insert(Constraint::new(e, c.rel))?;
        }
        let iv = interval_of(&sys.into_vec(), v)?;
        values.insert(v, pick(&iv));
    }
    Ok(values)
}

/// Infimum of `objective` over the solutions of `cs`: `Ok(None)` when
/// unbounded below, otherwise the bound and whether it is attained.
pub fn minimize(cs: &[Constraint], objective: &LinExpr) -> Result<Option<Bound>, Infeasible> {
    let z = cs
        .iter()
        .flat_map(|c| c.expr.terms.iter().map(|(v, _)| *v))
        .chain(objective.terms.iter().map(|(v, _)| *v))
        .max()
        .map_or(0, |m| m + 1);
    let mut all = cs.to_vec();
    // objective - z = 0
    all.push(Constraint::new(objective.add_scaled(&LinExpr::var(z), &-Rat::one()), Rel::Eq));
    let iv = project(&all, z)?;
    Ok(iv.lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(terms: &[(Var, i64)], k: i64) -> Constraint {
        let mut terms: Vec<(Var, Rat)> = terms.iter().map(|(v, c)| (*v, Rat::from_int(*c))).collect();
        terms.sort_by_key(|t| t.0);
        Constraint::new(LinExpr { terms, constant: Rat::from_int(k) }, Rel::Le)
    }

    #[test]
    fn projection_of_chained_bounds() {
        // x >= 20, x - y <= 0, y <= 100
        let cs = vec![le(&[(0, -1)], 20), le(&[(0, 1), (1, -1)], 0), le(&[(1, 1)], -100)];
        let iv = project(&cs, 1).unwrap();
        assert_eq!(iv, Interval::closed(Rat::from_int(20), Rat::from_int(100)));
    }

    #[test]
    fn strictness_is_tracked() {
        // x < y, y < x is infeasible; x < y, y <= 3 gives x < 3
        let mut a = le(&[(0, 1), (1, -1)], 0);
        a.rel = Rel::Lt;
        let mut b = le(&[(1, 1), (0, -1)], 0);
        b.rel = Rel::Lt;
        assert!(!feasible(&[a.clone(), b]));
        let iv = project(&[a, le(&[(1, 1)], -3)], 0).unwrap();
        assert_eq!(iv.hi, Some(Bound::open(Rat::from_int(3))));
        assert_eq!(iv.lo, None);
    }

    #[test]
    fn witness_prefers_lower_bounds() {
        let cs = vec![le(&[(0, -1)], 2), le(&[(0, 1), (1, -1)], 0), le(&[(1, 1)], -10)];
        let w = witness(&cs, &[0, 1]).unwrap();
        assert_eq!(w[&0], Rat::from_int(2));
        assert_eq!(w[&1], Rat::from_int(2));
        assert!(cs.iter().all(|c| c.holds(&w) == Some(true)));
    }

    #[test]
    fn minimize_reports_attainment() {
        let mut c = le(&[(0, -1)], 1);
        c.rel = Rel::Lt; // x > 1
        let obj = LinExpr::var(0);
        assert_eq!(minimize(&[c.clone()], &obj).unwrap(), Some(Bound::open(Rat::one())));
        assert_eq!(minimize(&[], &LinExpr::var(0).scale(&-Rat::one())).unwrap(), None);
    }
}
