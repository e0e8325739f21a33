//! Minimal explanations by deletion, and relevance of cells.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ground::{rename, CellId, CellKind, GFormula, GroundProblem};
use crate::model::{Assignment, Key, PartialStructure};

use super::engine::{Engine, Tri};
use super::{
    find_model, propagate, restriction_formula, Budget, Deadline, Domain, Prepared, PropagationResult, SolveError,
    Status,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Law {
    pub id: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "assignment")]
pub enum Target {
    Value(Assignment),
    Inconsistency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Explanation {
    pub assignments: Vec<Assignment>,
    pub laws: Vec<Law>,
    pub target: Target,
}

/// Laws that can matter: those with at least one clause that is not
/// trivially true.
fn candidate_laws(gp: &GroundProblem) -> Vec<usize> {
    let mut live = vec![false; gp.theory.formulas.len()];
    for c in &gp.clauses {
        if c.body != GFormula::Const(true) {
            live[c.formula] = true;
        }
    }
    (0..live.len()).filter(|&i| live[i]).collect()
}

/// Shrinks user assumptions and laws to a subset-minimal set under which
/// `always` plus `goal` stays unsatisfiable. Elements are tried in a fixed
/// order: assumptions as entered, then laws in theory order.
fn shrink(
    gp: &GroundProblem,
    st: &PartialStructure,
    prep: &Prepared,
    goal: Option<GFormula>,
    deadline: Deadline,
) -> Result<(Vec<Assignment>, Vec<Law>), SolveError> {
    let mut user_on = vec![true; prep.user.len()];
    let mut law_on = vec![false; gp.theory.formulas.len()];
    let laws = candidate_laws(gp);
    for &l in &laws {
        law_on[l] = true;
    }
    let unsat = |user_on: &[bool], law_on: &[bool]| -> Result<bool, SolveError> {
        let mut extra = prep.always.clone();
        extra.extend(prep.user.iter().zip(user_on).filter(|(_, on)| **on).map(|((_, f), _)| f.clone()));
        extra.extend(goal.clone());
        Ok(find_model(gp, Some(law_on), extra, deadline, false)?.is_none())
    };
    for i in 0..user_on.len() {
        user_on[i] = false;
        if !unsat(&user_on, &law_on)? {
            user_on[i] = true;
        }
    }
    for &l in &laws {
        law_on[l] = false;
        if !unsat(&user_on, &law_on)? {
            law_on[l] = true;
        }
    }
    let assignments =
        prep.user.iter().zip(&user_on).filter(|(_, on)| **on).map(|((i, _), _)| st.assignments[*i].clone()).collect();
    let laws = laws
        .into_iter()
        .filter(|&l| law_on[l])
        .map(|l| {
            let f = &gp.theory.formulas[l];
            Law { id: f.id.clone(), label: f.label.clone() }
        })
        .collect();
    Ok((assignments, laws))
}

/// Why `target` follows from `st`: a minimal set of user assignments and
/// laws that still entails it. The target may be an exact value or a bound.
pub fn explain_value(
    gp: &GroundProblem,
    st: &PartialStructure,
    target: &Assignment,
    budget: &Budget,
) -> Result<Explanation, SolveError> {
    let prep = Prepared::new(gp, st)?;
    let deadline = Deadline::new(budget);
    let c = gp.cell(&target.key).ok_or_else(|| SolveError::UnknownKey(target.key.clone()))?;
    let negated = GFormula::not(restriction_formula(gp, c, &target.value));
    let mut all = prep.all();
    if find_model(gp, None, all.clone(), deadline, false)?.is_none() {
        return Err(SolveError::Inconsistent);
    }
    all.push(negated.clone());
    if find_model(gp, None, all, deadline, false)?.is_some() {
        return Err(SolveError::NotAConsequence(target.to_string()));
    }
    let (assignments, laws) = shrink(gp, st, &prep, Some(negated), deadline)?;
    Ok(Explanation { assignments, laws, target: Target::Value(target.clone()) })
}

/// A minimal set of user assignments and laws with no model.
pub fn explain_inconsistency(
    gp: &GroundProblem,
    st: &PartialStructure,
    budget: &Budget,
) -> Result<Explanation, SolveError> {
    let prep = Prepared::new(gp, st)?;
    let deadline = Deadline::new(budget);
    if find_model(gp, None, prep.all(), deadline, false)?.is_some() {
        return Err(SolveError::Consistent);
    }
    let (assignments, laws) = shrink(gp, st, &prep, None, deadline)?;
    Ok(Explanation { assignments, laws, target: Target::Inconsistency })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relevance {
    Relevant,
    Irrelevant,
    /// The exact test ran out of time.
    Unknown,
}

/// Whether each cell can still matter: a cell is irrelevant when no clause
/// mentioning it can be falsified by changing its value in any model.
pub fn relevance(
    gp: &GroundProblem,
    st: &PartialStructure,
    budget: &Budget,
) -> Result<BTreeMap<Key, Relevance>, SolveError> {
    let prop = propagate(gp, st, budget)?;
    relevance_with(gp, st, &prop, budget)
}

/// [`relevance`] reusing an earlier propagation of the same structure.
pub fn relevance_with(
    gp: &GroundProblem,
    st: &PartialStructure,
    prop: &PropagationResult,
    budget: &Budget,
) -> Result<BTreeMap<Key, Relevance>, SolveError> {
    let all: Vec<CellId> = (0..gp.cells.len()).collect();
    relevance_of(gp, st, prop, &all, budget)
}

/// [`relevance_with`] restricted to some cells.
pub fn relevance_of(
    gp: &GroundProblem,
    st: &PartialStructure,
    prop: &PropagationResult,
    cells: &[CellId],
    budget: &Budget,
) -> Result<BTreeMap<Key, Relevance>, SolveError> {
    if prop.status == Status::Inconsistent {
        return Err(SolveError::Inconsistent);
    }
    let prep = Prepared::new(gp, st)?;
    let deadline = Deadline::new(budget);
    let eng = Engine::new(gp, Some(&vec![false; gp.theory.formulas.len()]), Vec::new(), deadline);

    // Propagated domains as a search state.
    let mut narrowed = eng.base_state();
    for (c, cell) in gp.cells.iter().enumerate() {
        match (&cell.kind, prop.domains.get(&cell.key)) {
            (CellKind::Finite(ids), Some(Domain::Finite(kept))) => {
                for (p, &id) in ids.iter().enumerate() {
                    if !kept.contains(gp.value(id)) && eng.has(&narrowed, c, p) {
                        eng.remove(&mut narrowed, c, p);
                    }
                }
            }
            (CellKind::Numeric { .. }, Some(Domain::Numeric(iv))) => {
                if let (Some(lo), Some(hi)) = (&iv.lo, &iv.hi) {
                    narrowed.lo[cell.slot] = lo.value.clone();
                    narrowed.hi[cell.slot] = hi.value.clone();
                }
            }
            _ => {}
        }
    }
    let base = eng.base_state();

    let mut mentions: Vec<Vec<usize>> = vec![Vec::new(); gp.cells.len()];
    for (q, clause) in gp.clauses.iter().enumerate() {
        for &c in clause.finite.iter().chain(&clause.numeric) {
            mentions[c].push(q);
        }
    }

    // Cheap pass: a clause true for every value of `c` against the
    // propagated domains of the others cannot be falsified through `c`.
    let mut out = BTreeMap::new();
    let mut open: Vec<(CellId, Vec<usize>)> = Vec::new();
    for &c in cells {
        let cell = &gp.cells[c];
        let mut st = narrowed.clone();
        eng.copy_cell(&mut st, &base, c);
        let pending: Vec<usize> =
            mentions[c].iter().copied().filter(|&q| eng.eval(&st, &gp.clauses[q].body, None) != Tri::T).collect();
        if pending.is_empty() {
            out.insert(cell.key.clone(), Relevance::Irrelevant);
        } else {
            open.push((c, pending));
        }
    }
    if open.is_empty() {
        return Ok(out);
    }

    // Exact pass: look for a model together with another value of `c`
    // (held by a twin cell) that falsifies the clause.
    let cells: Vec<CellId> = open.iter().map(|(c, _)| *c).collect();
    let (twin_gp, twins) = gp.with_twins(&cells);
    let always = prep.all();
    let mut timed_out = false;
    for ((c, pending), twin) in open.into_iter().zip(twins) {
        let key = gp.cells[c].key.clone();
        if timed_out {
            out.insert(key, Relevance::Unknown);
            continue;
        }
        let mut verdict = Relevance::Irrelevant;
        for q in pending {
            let mut extra = always.clone();
            extra.push(GFormula::not(rename(&gp.clauses[q].body, c, twin)));
            match find_model(&twin_gp, None, extra, deadline, false) {
                Ok(Some(_)) => {
                    verdict = Relevance::Relevant;
                    break;
                }
                Ok(None) => {}
                Err(SolveError::Timeout) => {
                    verdict = Relevance::Unknown;
                    timed_out = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        out.insert(key, verdict);
    }
    Ok(out)
}
