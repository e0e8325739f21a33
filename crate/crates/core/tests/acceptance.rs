//! Acceptance suite: one line per criterion, non-zero exit when any fails.
//! Run alone with `cargo test -p kbsel-core --test acceptance`; a name
//! fragment as argument runs only the matching criteria.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use kbsel::adhesive::{
    build_kb, generate_catalog, generate_synthetic_catalog, remaining_adhesives, Catalog, Dims, RequirementSchema,
    ADHESIVE_PARAMS,
};
use kbsel::cdmn::{check_unique, compile_tables, parse_table, parse_tables};
use kbsel::consultant::{Consultant, SetRequest, StateView, TileKind};
use kbsel::ground::ground;
use kbsel::solve::{
    check, explain_inconsistency, explain_value, optimize, propagate, Budget, CheckResult, Direction, Domain,
    Explanation, OptimizationGoal, OptimizeResult, Status,
};
use kbsel::{parse_kb, serialize, Assignment, Interval, Key, PartialStructure, Rat, Restriction, Term, Theory, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{models, projection, random_kb, Model};

type Check = fn() -> String;

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("explanation minimality", explanation_minimality),
        ("fallback semantics", fallback_semantics),
        ("temperature clash core", temperature_clash),
        ("decision table semantics", table_semantics),
        ("guided interaction safety", guided_walk),
        ("latency of a 9-requirement session", latency),
        ("determinism", determinism),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => println!("PASS  {name}: {detail} ({:.1?})", t.elapsed()),
            Err(p) => {
                failed += 1;
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  {name}: {msg} ({:.1?})", t.elapsed());
            }
        }
    }
    std::panic::set_hook(hook);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn budget() -> Budget {
    Budget::default()
}

fn rat(s: &str) -> Rat {
    Rat::parse(s).unwrap()
}

fn num(s: &str) -> Value {
    Value::Num(rat(s))
}

// -- oracle equivalence ------------------------------------------------------

fn oracle_equivalence() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut optimized = 0;
    for round in 0..220 {
        let kb = random_kb(&mut rng, 10_000);
        let gp = ground(&kb.vocabulary, &kb.theory, &PartialStructure::new()).unwrap();
        let ms = models(&kb.vocabulary, &kb.theory, &kb.structure);
        let ctx = || format!("round {round}\n{}", serialize(&kb.vocabulary, &kb.theory, &kb.structure));
        let r = propagate(&gp, &kb.structure, &budget()).unwrap();
        match check(&gp, &kb.structure, &budget()).unwrap() {
            CheckResult::Unsat => assert!(ms.is_empty(), "expand missed a model: {}", ctx()),
            CheckResult::Sat(w) => {
                let m: Model = w.iter().map(|a| (a.key.clone(), exact(a).clone())).collect();
                assert!(ms.contains(&m), "expand returned a non-model: {}", ctx());
            }
        }
        if ms.is_empty() {
            assert_eq!(r.status, Status::Inconsistent, "{}", ctx());
            continue;
        }
        assert_eq!(r.status, Status::Consistent, "{}", ctx());
        for (key, vals) in projection(&ms) {
            let Domain::Finite(got) = &r.domains[&key] else { panic!("finite cell {key}") };
            assert_eq!(got.iter().cloned().collect::<BTreeSet<_>>(), vals, "propagate {key}: {}", ctx());
        }
        for sym in kb.vocabulary.symbols.iter().filter(|s| s.result == "N" && s.args.is_empty()) {
            optimized += 1;
            let key = Key::constant(&sym.name);
            for dir in [Direction::Minimize, Direction::Maximize] {
                let goal = OptimizationGoal { term: Term::sym(&sym.name), direction: dir };
                let vals = ms.iter().map(|m| m[&key].as_num().unwrap().clone());
                let best = if dir == Direction::Minimize { vals.min() } else { vals.max() }.unwrap();
                match optimize(&gp, &kb.structure, &goal, &budget()).unwrap() {
                    OptimizeResult::Optimal { value, .. } => {
                        assert_eq!(value, best, "optimize {}: {}", sym.name, ctx())
                    }
                    other => panic!("optimize {}: {other:?} {}", sym.name, ctx()),
                }
            }
        }
    }
    let scenarios = mini_catalog_oracle();
    format!("220 random KBs, {optimized} optimizations, {scenarios} mini-catalog sessions")
}

fn exact(a: &Assignment) -> &Value {
    match &a.value {
        Restriction::Exact(v) => v,
        Restriction::Within(_) => panic!("witness is exact"),
    }
}

/// A requirement scenario on a mini catalog. Everything that could make
/// the models of the adhesive KB infinite is fixed, so its models are one
/// per feasible adhesive and the oracle below can decide each directly.
#[derive(Debug)]
struct Scenario {
    sub_a: String,
    sub_b: String,
    min_op: Rat,
    max_op: Rat,
    min_app: Rat,
    max_app: Rat,
    fixed: bool,
    delta: Rat,
    thick: Rat,
    flags: [bool; 8],
    // thresholds; an unset one can always be met
    min_strength: Option<Rat>,
    max_price: Option<Rat>,
    max_visc: Option<Rat>,
    max_cure: Option<Rat>,
    min_pot: Option<Rat>,
}

const FLAGS: [&str; 8] = [
    "WaterExposure",
    "SolventExposure",
    "UvExposure",
    "HeatCuringAvailable",
    "UvCuringAvailable",
    "Transparent",
    "FoodContact",
    "GapFill",
];

impl Scenario {
    fn random(rng: &mut ChaCha8Rng, cat: &Catalog) -> Self {
        let subs: Vec<&String> = cat.substrates.iter().map(|s| &s.id).collect();
        let r = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| Rat::from_int(rng.gen_range(lo..=hi));
        let maybe = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| rng.gen_bool(0.5).then(|| r(rng, lo, hi));
        let min_op = r(rng, -60, 40);
        let max_op = &min_op + &r(rng, -10, 160);
        let min_app = r(rng, 0, 20);
        let max_app = &min_app + &r(rng, 0, 40);
        Scenario {
            sub_a: subs.choose(rng).unwrap().to_string(),
            sub_b: subs.choose(rng).unwrap().to_string(),
            min_op,
            max_op,
            min_app,
            max_app,
            fixed: rng.gen_bool(0.5),
            delta: Rat::new(rng.gen_range(0..=10), 10),
            thick: [rat("0.1"), rat("0.5"), rat("1"), rat("2")].choose(rng).unwrap().clone(),
            flags: std::array::from_fn(|_| rng.gen_bool(0.4)),
            min_strength: maybe(rng, 0, 40),
            max_price: maybe(rng, 5, 250),
            max_visc: maybe(rng, 1, 400),
            max_cure: maybe(rng, 10, 1440),
            min_pot: maybe(rng, 0, 200),
        }
    }

    fn assignments(&self) -> Vec<Assignment> {
        let mut out = vec![
            Assignment::user("SubstrateA", vec![], Value::sym(&self.sub_a)),
            Assignment::user("SubstrateB", vec![], Value::sym(&self.sub_b)),
            Assignment::user("MinOperatingTemp", vec![], Value::Num(self.min_op.clone())),
            Assignment::user("MaxOperatingTemp", vec![], Value::Num(self.max_op.clone())),
            Assignment::user("MinApplicationTemp", vec![], Value::Num(self.min_app.clone())),
            Assignment::user("MaxApplicationTemp", vec![], Value::Num(self.max_app.clone())),
            Assignment::user("Support", vec![], Value::sym(if self.fixed { "fixed" } else { "floating" })),
            Assignment::user("deltaLength", vec![], Value::Num(self.delta.clone())),
            Assignment::user("BondThickness", vec![], Value::Num(self.thick.clone())),
        ];
        for (name, on) in FLAGS.iter().zip(self.flags) {
            out.push(Assignment::user(name, vec![], Value::Bool(on)));
        }
        let thresholds = [
            ("MinBondStrength", &self.min_strength),
            ("MaxPrice", &self.max_price),
            ("MaxViscosity", &self.max_visc),
            ("MaxCureTime", &self.max_cure),
            ("MinPotLife", &self.min_pot),
        ];
        for (name, v) in thresholds {
            if let Some(v) = v {
                out.push(Assignment::user(name, vec![], Value::Num(v.clone())));
            }
        }
        out
    }
}

fn unknown(v: &Value) -> bool {
    *v == Value::int(-1000) || *v == Value::sym("unknown")
}

/// Own value, else the family's, else none.
fn effective(cat: &Catalog, adhesive: &str, param: &str) -> Option<Value> {
    let a = cat.adhesives.iter().find(|a| a.id == adhesive).unwrap();
    let f = cat.families.iter().find(|f| f.id == a.family).unwrap();
    [&a.params[param], &f.params[param]].into_iter().find(|v| !unknown(v)).cloned()
}

fn substrate<'a>(cat: &'a Catalog, id: &str, param: &str) -> &'a Value {
    &cat.substrates.iter().find(|s| s.id == id).unwrap().params[param]
}

fn known_num(v: &Value) -> Option<Rat> {
    (!unknown(v)).then(|| v.as_num().unwrap().clone())
}

fn scenario_ok(cat: &Catalog, sc: &Scenario) -> bool {
    let sub_temp_ok =
        [&sc.sub_a, &sc.sub_b].iter().all(|s| known_num(substrate(cat, s, "max_temp")).is_none_or(|t| sc.max_op <= t));
    sc.min_op <= sc.max_op && sc.min_app <= sc.max_app && sub_temp_ok
}

fn adhesive_ok(cat: &Catalog, adh: &str, sc: &Scenario) -> bool {
    let e = |p: &str| effective(cat, adh, p);
    let n = |p: &str| e(p).map(|v| v.as_num().unwrap().clone());
    let is = |p: &str, s: &str| e(p) == Some(Value::sym(s));
    let is_not = |p: &str, s: &str| e(p).is_some() && !is(p, s);
    let le = |p: &str, bound: &Rat| n(p).is_none_or(|x| &x <= bound);
    let ge = |p: &str, bound: &Rat| n(p).is_none_or(|x| &x >= bound);
    let sub = |p: &str| [substrate(cat, &sc.sub_a, p), substrate(cat, &sc.sub_b, p)];
    let [flag_water, flag_solvent, flag_uv, heat, uv_cure, transparent, food, gap_fill] = sc.flags;

    let min_elong = if sc.fixed { &sc.delta / &sc.thick } else { Rat::zero() };
    let swing = &sc.max_op - &sc.min_op;
    let te = sub("thermal_expansion");
    let cte = match (known_num(te[0]), known_num(te[1])) {
        (Some(a), Some(b)) => a - b,
        _ => Rat::zero(),
    };
    let moving = swing >= Rat::from_int(60) && (cte >= Rat::from_int(50) || cte <= Rat::from_int(-50));

    let mut ok = le("service_min", &sc.min_op)
        && ge("service_max", &sc.max_op)
        && le("application_min", &sc.min_app)
        && ge("application_max", &sc.max_app)
        && ge("elongation", &min_elong)
        && ge("max_gap", &sc.thick);
    let thresholds = [
        (&sc.min_strength, "strength", true),
        (&sc.max_price, "price", false),
        (&sc.max_visc, "viscosity", false),
        (&sc.max_cure, "cure_time", false),
        (&sc.min_pot, "pot_life", true),
    ];
    for (t, p, at_least) in thresholds {
        if let Some(t) = t {
            ok &= if at_least { ge(p, t) } else { le(p, t) };
        }
    }
    let yes = Value::sym("yes");
    ok &= !(gap_fill && is_not("gap_filling", "yes"));
    ok &= !(!heat && is("cure", "heat"));
    ok &= !(!uv_cure && is("cure", "uv"));
    ok &= !(is("cure", "uv") && !sub("transparent").contains(&&yes));
    ok &= !(flag_water && is_not("water", "good"));
    ok &= !(flag_solvent && is("solvent", "poor"));
    ok &= !(flag_uv && is("uv", "poor"));
    ok &= !(transparent && is_not("color", "clear"));
    ok &= !(food && is_not("food_safe", "yes"));
    for v in sub("surface_energy") {
        if known_num(v).is_some_and(|x| x < Rat::from_int(36)) {
            ok &= !is_not("low_energy", "yes");
        }
    }
    if sub("solvent_sensitive").contains(&&yes) {
        ok &= !is("solvent_based", "yes");
    }
    if sub("flexible").contains(&&yes) || moving {
        ok &= !is("flexibility", "rigid");
    }
    if sub("porous").contains(&&yes) {
        ok &= ge("viscosity", &Rat::one());
    }
    if sub("water_absorption").iter().any(|v| known_num(v).is_some_and(|x| x > Rat::from_int(5))) {
        ok &= !is("water", "poor");
    }
    ok
}

/// Value of the effective symbol once the adhesive is chosen: the fallback
/// laws copy the family's stored value even when that is the sentinel.
fn stored_or_family(cat: &Catalog, adh: &str, param: &str) -> Value {
    let a = cat.adhesives.iter().find(|a| a.id == adh).unwrap();
    let f = cat.families.iter().find(|f| f.id == a.family).unwrap();
    if unknown(&a.params[param]) {
        f.params[param].clone()
    } else {
        a.params[param].clone()
    }
}

fn mini_catalog_oracle() -> usize {
    let mut sessions = 0;
    for seed in 0..3 {
        let cat = generate_catalog(seed, Dims { adhesives: 5, families: 3, substrates: 3 });
        let kb = build_kb(&cat, &RequirementSchema::standard()).unwrap();
        let gp = ground(&kb.vocabulary, &kb.theory, &kb.structure).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        for _ in 0..12 {
            sessions += 1;
            let sc = Scenario::random(&mut rng, &cat);
            let mut st = kb.structure.clone();
            for a in sc.assignments() {
                st.push(a);
            }
            let want: Vec<String> = if scenario_ok(&cat, &sc) {
                cat.adhesives.iter().filter(|a| adhesive_ok(&cat, &a.id, &sc)).map(|a| a.id.clone()).collect()
            } else {
                Vec::new()
            };
            let ctx = format!("catalog {seed}, {sc:?}");
            let got = remaining_adhesives(&gp, &st, &budget()).unwrap();
            assert_eq!(got.ids, want, "remaining adhesives, {ctx}");

            let prop = propagate(&gp, &st, &budget()).unwrap();
            assert_eq!(prop.status == Status::Consistent, !want.is_empty(), "{ctx}");
            if !want.is_empty() {
                for param in ["strength", "price"] {
                    let def = ADHESIVE_PARAMS.iter().find(|d| d.id == param).unwrap();
                    let vals: Vec<Rat> =
                        want.iter().map(|a| stored_or_family(&cat, a, param).as_num().unwrap().clone()).collect();
                    let lo = vals.iter().min().unwrap().clone();
                    let hi = vals.iter().max().unwrap().clone();
                    let Domain::Numeric(iv) = &prop.domains[&Key::constant(def.effective)] else { panic!() };
                    assert_eq!(iv, &Interval::closed(lo, hi), "{} bounds, {ctx}", def.effective);
                }
            }

            match check(&gp, &st, &budget()).unwrap() {
                CheckResult::Unsat => assert!(want.is_empty(), "expand, {ctx}"),
                CheckResult::Sat(w) => {
                    let chosen = w.exact(&Key::constant("Adhesive")).unwrap().to_string();
                    assert!(want.contains(&chosen), "expand chose {chosen}, {ctx}");
                }
            }

            // cheapest / strongest among the feasible adhesives whose value is known
            for (param, sym, dir) in
                [("price", "Price", Direction::Minimize), ("strength", "BondStrength", Direction::Maximize)]
            {
                let mut st = st.clone();
                st.push(Assignment::user("Known", vec![Value::sym(param)], Value::Bool(true)));
                let vals = want.iter().filter_map(|a| effective(&cat, a, param)).map(|v| v.as_num().unwrap().clone());
                let best = if dir == Direction::Minimize { vals.min() } else { vals.max() };
                let goal = OptimizationGoal { term: Term::sym(sym), direction: dir };
                match (optimize(&gp, &st, &goal, &budget()).unwrap(), best) {
                    (OptimizeResult::Optimal { value, .. }, Some(b)) => assert_eq!(value, b, "{sym}, {ctx}"),
                    (OptimizeResult::Unsat, None) => {}
                    (r, b) => panic!("{sym}: got {r:?}, expected {b:?}, {ctx}"),
                }
            }
        }
    }
    sessions
}

// -- explanation minimality ----------------------------------------------------

fn only_laws(th: &Theory, ids: &[&str]) -> Theory {
    Theory { formulas: th.formulas.iter().filter(|f| ids.contains(&f.id.as_str())).cloned().collect() }
}

/// Every proper subset of the explanation loses the property.
fn exhaustively_minimal(e: &Explanation, holds: &dyn Fn(&Theory, &PartialStructure) -> bool, th: &Theory) -> bool {
    let n_a = e.assignments.len();
    let items = n_a + e.laws.len();
    let full = (1u32 << items) - 1;
    let subset = |mask: u32| {
        let st = PartialStructure::from_assignments(
            (0..n_a).filter(|i| mask & (1 << i) != 0).map(|i| e.assignments[i].clone()).collect(),
        );
        let ids: Vec<&str> =
            (0..e.laws.len()).filter(|j| mask & (1 << (n_a + j)) != 0).map(|j| e.laws[j].id.as_str()).collect();
        (only_laws(th, &ids), st)
    };
    let (t, s) = subset(full);
    assert!(holds(&t, &s), "the explanation itself does not entail its target");
    (0..full).all(|mask| {
        let (t, s) = subset(mask);
        !holds(&t, &s)
    })
}

fn explanation_minimality() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut cores, mut values) = (0, 0);
    while cores < 60 || values < 60 {
        let kb = random_kb(&mut rng, 2_000);
        let gp = ground(&kb.vocabulary, &kb.theory, &PartialStructure::new()).unwrap();
        let voc = &kb.vocabulary;
        if models(voc, &kb.theory, &kb.structure).is_empty() {
            if cores >= 60 {
                continue;
            }
            let e = explain_inconsistency(&gp, &kb.structure, &budget()).unwrap();
            if e.assignments.len() + e.laws.len() > 8 {
                continue;
            }
            cores += 1;
            let unsat = |th: &Theory, st: &PartialStructure| models(voc, th, st).is_empty();
            assert!(exhaustively_minimal(&e, &unsat, &kb.theory), "core not minimal: {e:?}");
        } else {
            if values >= 60 {
                continue;
            }
            let r = propagate(&gp, &kb.structure, &budget()).unwrap();
            let Some(target) = r.consequences.first().cloned() else { continue };
            let e = explain_value(&gp, &kb.structure, &target, &budget()).unwrap();
            if e.assignments.len() + e.laws.len() > 8 {
                continue;
            }
            values += 1;
            let v = exact(&target).clone();
            let entails = |th: &Theory, st: &PartialStructure| models(voc, th, st).iter().all(|m| m[&target.key] == v);
            assert!(exhaustively_minimal(&e, &entails, &kb.theory), "explanation not minimal: {e:?}");
        }
    }
    format!("{cores} inconsistency cores and {values} value explanations, all proper subsets checked")
}

// -- fallback semantics --------------------------------------------------------

/// Requirement assignments that only an adhesive with the `bad` value of
/// the parameter violates, with a `good` and a `bad` stored value.
fn probes() -> Vec<(&'static str, Vec<(&'static str, Value)>, Value, Value)> {
    let s = Value::sym;
    let t = Value::Bool(true);
    vec![
        ("strength", vec![("MinBondStrength", num("20"))], num("30"), num("10")),
        (
            "elongation",
            vec![("Support", s("fixed")), ("deltaLength", num("0.2")), ("BondThickness", num("0.1"))],
            num("3"),
            num("1"),
        ),
        ("service_min", vec![("MinOperatingTemp", num("-40"))], num("-50"), num("-20")),
        ("service_max", vec![("MaxOperatingTemp", num("150"))], num("200"), num("100")),
        ("application_min", vec![("MinApplicationTemp", num("5"))], num("0"), num("10")),
        ("application_max", vec![("MaxApplicationTemp", num("40"))], num("50"), num("30")),
        ("price", vec![("MaxPrice", num("50"))], num("20"), num("100")),
        ("viscosity", vec![("MaxViscosity", num("10"))], num("5"), num("50")),
        ("cure_time", vec![("MaxCureTime", num("60"))], num("30"), num("120")),
        ("pot_life", vec![("MinPotLife", num("30"))], num("60"), num("10")),
        ("max_gap", vec![("BondThickness", num("2"))], num("5"), num("1")),
        ("cure", vec![("HeatCuringAvailable", Value::Bool(false))], s("mixing"), s("heat")),
        ("water", vec![("WaterExposure", t.clone())], s("good"), s("fair")),
        ("solvent", vec![("SolventExposure", t.clone())], s("good"), s("poor")),
        ("uv", vec![("UvExposure", t.clone())], s("good"), s("poor")),
        ("flexibility", vec![("SubstrateA", s("demanding"))], s("flexible"), s("rigid")),
        ("color", vec![("Transparent", t.clone())], s("clear"), s("black")),
        ("gap_filling", vec![("GapFill", t.clone())], s("yes"), s("no")),
        ("food_safe", vec![("FoodContact", t.clone())], s("yes"), s("no")),
        ("low_energy", vec![("SubstrateA", s("demanding"))], s("yes"), s("no")),
        ("solvent_based", vec![("SubstrateA", s("demanding"))], s("no"), s("yes")),
    ]
}

fn blank(value: &Value) -> Value {
    if value.as_num().is_some() {
        Value::int(-1000)
    } else {
        Value::sym("unknown")
    }
}

/// a1 has its own good value in a family with a bad one, a2 inherits the
/// bad family value, a3 knows nothing. Every other parameter is unknown
/// everywhere. Substrate `plain` triggers nothing, `demanding` is a flexible,
/// solvent-sensitive low energy plastic.
fn fallback_fixture(param: &str, good: &Value, bad: &Value) -> Catalog {
    let mut c = generate_catalog(0, Dims { adhesives: 3, families: 2, substrates: 2 });
    let blank_all = |params: &mut std::collections::BTreeMap<String, Value>| {
        for v in params.values_mut() {
            *v = blank(v);
        }
    };
    for f in &mut c.families {
        blank_all(&mut f.params);
    }
    c.families[0].params.insert(param.into(), bad.clone());
    let (f0, f1) = (c.families[0].id.clone(), c.families[1].id.clone());
    for (i, (id, fam)) in [("a1", &f0), ("a2", &f0), ("a3", &f1)].into_iter().enumerate() {
        let a = &mut c.adhesives[i];
        a.id = id.into();
        a.family = fam.clone();
        blank_all(&mut a.params);
    }
    c.adhesives[0].params.insert(param.into(), good.clone());
    for (s, id) in c.substrates.iter_mut().zip(["plain", "demanding"]) {
        s.id = id.into();
        for (k, v) in s.params.iter_mut() {
            *v = match k.as_str() {
                "porous" | "solvent_sensitive" | "flexible" | "transparent" => Value::sym("no"),
                "material" | "roughness" | "pretreatment" => v.clone(),
                _ => Value::int(-1000),
            };
        }
    }
    let d = &mut c.substrates[1].params;
    d.insert("surface_energy".into(), Value::int(30));
    d.insert("flexible".into(), Value::sym("yes"));
    d.insert("solvent_sensitive".into(), Value::sym("yes"));
    c
}

fn fallback_semantics() -> String {
    let probes = probes();
    assert_eq!(probes.len(), ADHESIVE_PARAMS.len());
    let mut combined: Vec<(&str, Value)> = Vec::new();
    for (param, reqs, good, bad) in &probes {
        let cat = fallback_fixture(param, good, bad);
        let kb = build_kb(&cat, &RequirementSchema::standard()).unwrap();
        let gp = ground(&kb.vocabulary, &kb.theory, &kb.structure).unwrap();
        let def = ADHESIVE_PARAMS.iter().find(|d| d.id == *param).unwrap();
        let mut base = kb.structure.clone();
        base.push(Assignment::user("SubstrateA", vec![], Value::sym("plain")));
        base.push(Assignment::user("SubstrateB", vec![], Value::sym("plain")));

        // which of the three cases holds, per adhesive
        let flag = |r: &kbsel::solve::PropagationResult, sym: &str| {
            let Domain::Finite(vs) = &r.domains[&Key::new(sym, vec![Value::sym(param)])] else { panic!() };
            vs.clone()
        };
        for (adh, own, fam, value) in
            [("a1", true, true, Some(good)), ("a2", false, true, Some(bad)), ("a3", false, false, None)]
        {
            let mut st = base.clone();
            st.push(Assignment::user("Adhesive", vec![], Value::sym(adh)));
            let r = propagate(&gp, &st, &budget()).unwrap();
            assert_eq!(r.status, Status::Consistent, "{param}/{adh}");
            assert_eq!(flag(&r, "KnownAdhesive"), [Value::Bool(own)], "{param}/{adh} own");
            assert_eq!(flag(&r, "KnownFamily"), [Value::Bool(fam)], "{param}/{adh} family");
            assert_eq!(flag(&r, "Known"), [Value::Bool(own || fam)], "{param}/{adh} known");
            if let Some(v) = value {
                let got = match &r.domains[&Key::constant(def.effective)] {
                    Domain::Finite(vs) => vs.clone(),
                    Domain::Numeric(iv) => vec![Value::Num(iv.lo.clone().unwrap().value)],
                };
                assert_eq!(got, [v.clone()], "{param}/{adh} effective value");
            }
        }

        let all = remaining_adhesives(&gp, &base, &budget()).unwrap();
        assert_eq!(all.ids, ["a1", "a2", "a3"], "{param} without requirement");
        let mut st = base.clone();
        for (sym, v) in reqs {
            st.push(Assignment::user(sym, vec![], v.clone()));
        }
        let st = PartialStructure::from_assignments(dedup_last(st.assignments));
        let kept = remaining_adhesives(&gp, &st, &budget()).unwrap();
        assert_eq!(kept.ids, ["a1", "a3"], "{param}: own value wins, family value applies, unknown is ignored");
        for (sym, v) in reqs {
            combined.retain(|(s, _)| s != sym);
            combined.push((sym, v.clone()));
        }
    }

    // all probes at once: the adhesive that knows nothing still survives
    let cat = fallback_fixture("strength", &num("30"), &num("10"));
    let kb = build_kb(&cat, &RequirementSchema::standard()).unwrap();
    let gp = ground(&kb.vocabulary, &kb.theory, &kb.structure).unwrap();
    let mut st = kb.structure.clone();
    st.push(Assignment::user("SubstrateB", vec![], Value::sym("plain")));
    for (sym, v) in &combined {
        st.push(Assignment::user(sym, vec![], v.clone()));
    }
    let kept = remaining_adhesives(&gp, &st, &budget()).unwrap();
    assert!(kept.ids.contains(&"a3".to_string()), "ignored constraints eliminated a3: {kept:?}");
    format!("{} parameters, three cases each, ignored case survives all {} requirements", probes.len(), combined.len())
}

/// Keeps the last assignment per key.
fn dedup_last(v: Vec<Assignment>) -> Vec<Assignment> {
    let mut out: Vec<Assignment> = Vec::new();
    for a in v {
        out.retain(|b| b.key != a.key);
        out.push(a);
    }
    out
}

// -- temperature clash ---------------------------------------------------------

fn full_consultant() -> Consultant {
    let kb = build_kb(&generate_synthetic_catalog(1), &RequirementSchema::standard()).unwrap();
    Consultant::new(kb, budget()).unwrap()
}

fn req(symbol: &str, value: &str) -> SetRequest {
    SetRequest { symbol: symbol.into(), args: vec![], value: value.into() }
}

fn temperature_clash() -> String {
    let c = full_consultant();
    let s = c.set(&c.initial().unwrap(), &req("MinOperatingTemp", "20")).unwrap();
    assert_eq!(s.view.status, Status::Consistent);
    let s = c.set(&s, &req("MaxOperatingTemp", "10")).unwrap();
    assert_eq!(s.view.status, Status::Inconsistent);
    let core = s.view.inconsistency.expect("core attached");
    let choices: Vec<(&str, Option<&str>)> =
        core.assignments.iter().map(|a| (a.symbol.as_str(), a.value.as_deref())).collect();
    assert_eq!(choices, [("MinOperatingTemp", Some("20")), ("MaxOperatingTemp", Some("10"))]);
    let laws: Vec<&str> = core.laws.iter().map(|l| l.id.as_str()).collect();
    assert_eq!(laws, ["operating_order"]);
    "core = both temperatures + operating_order".into()
}

// -- decision tables -------------------------------------------------------------

const TABLE_VOCABULARY: &str = "vocabulary {
    type Param := {strength}.
    type Kind := {fixed, floating}.
    type Len := real[0..10].
    type Thick := real[0.01..10].
    type Ratio := real[0..1000].
    type Stress := real[0..100].
    type X := int[0..10].
    Support : () -> Kind.
    deltaLength : () -> Len.
    BondThickness : () -> Thick.
    MinElongation : () -> Ratio.
    Known : Param -> Bool.
    BondStrength : () -> Stress.
    MinBondStrength : () -> Stress.
    MaxStress : () -> Stress.
    x : () -> X.
    y : () -> X.
}";

fn table_semantics() -> String {
    let voc = parse_kb(TABLE_VOCABULARY).unwrap().vocabulary;
    let text = "table \"Calculation of MinElongation\"
U | Support   || MinElongation
1 | fixed     || deltaLength / BondThickness
2 | not fixed || 0
end

table \"Maximum stress\"
U || MaxStress
1 || BondStrength
end

table \"Strength requirement\"
E* | Known(strength) || MaxStress
1  | true            || >= MinBondStrength
end
";
    let tables = parse_tables(text, "fig.cdmn").unwrap();
    let th = compile_tables(&tables, &voc).unwrap();
    let gp = ground(&voc, &th, &PartialStructure::new()).unwrap();
    let run = |st: Vec<Assignment>| propagate(&gp, &PartialStructure::from_assignments(st), &budget()).unwrap();
    let u = |s: &str, v: Value| Assignment::user(s, vec![], v);

    let r = run(vec![u("Support", Value::sym("fixed")), u("deltaLength", num("0.2")), u("BondThickness", num("0.1"))]);
    let me = r.consequences.iter().find(|a| a.key == Key::constant("MinElongation")).expect("MinElongation propagated");
    assert_eq!(exact(me), &num("2"), "0.2 / 0.1");
    let r =
        run(vec![u("Support", Value::sym("floating")), u("deltaLength", num("0.2")), u("BondThickness", num("0.1"))]);
    let me = r.consequences.iter().find(|a| a.key == Key::constant("MinElongation")).unwrap();
    assert_eq!(exact(me), &num("0"));

    let known = |b: bool| Assignment::user("Known", vec![Value::sym("strength")], Value::Bool(b));
    let lo_of = |r: &kbsel::solve::PropagationResult, s: &str| match &r.domains[&Key::constant(s)] {
        Domain::Numeric(iv) => iv.lo.clone().unwrap().value,
        _ => panic!(),
    };
    let r = run(vec![known(true), u("MinBondStrength", num("20"))]);
    assert_eq!(lo_of(&r, "MaxStress"), rat("20"), "enforced when known");
    assert_eq!(lo_of(&r, "BondStrength"), rat("20"));
    let r = run(vec![known(false), u("MinBondStrength", num("20"))]);
    assert_eq!(lo_of(&r, "MaxStress"), rat("0"), "ignored when unknown");
    let r = run(vec![known(true), u("MinBondStrength", num("20")), u("BondStrength", num("10"))]);
    assert_eq!(r.status, Status::Inconsistent);

    let overlap = parse_table("table \"Overlap\"\nU | x || y\n1 | =< 5 || 1\n2 | >= 5 || 2\nend\n").unwrap();
    assert_eq!(check_unique(&overlap, &voc).unwrap(), [(1, 2)]);
    let disjoint = parse_table("table \"Disjoint\"\nU | x || y\n1 | < 5 || 1\n2 | >= 5 || 2\nend\n").unwrap();
    assert!(check_unique(&disjoint, &voc).unwrap().is_empty());
    "MinElongation = 2, strength rule guarded by Known, overlap of rows 1 and 2 flagged".into()
}

// -- guided interaction --------------------------------------------------------

fn guided_walk() -> String {
    let cat = generate_catalog(5, Dims { adhesives: 12, families: 5, substrates: 6 });
    let kb = build_kb(&cat, &RequirementSchema::standard()).unwrap();
    let c = Consultant::new(kb, budget()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut s = c.initial().unwrap();
    let (mut sets, mut retracts) = (0, 0);
    for step in 0..1000 {
        let open: Vec<(String, Vec<String>, Vec<String>)> = s
            .view
            .tiles
            .iter()
            .filter(|t| t.kind != TileKind::Number && t.origin.is_none())
            .filter_map(|t| t.candidates.clone().map(|cs| (t.symbol.clone(), t.args.clone(), cs)))
            .filter(|(_, _, cs)| !cs.is_empty())
            .collect();
        let retract = open.is_empty() || (!s.user.is_empty() && rng.gen_bool(0.3));
        if retract {
            let a = s.view.choices.choose(&mut rng).expect("something to retract").clone();
            s = c.retract(&s, &a.symbol, &a.args).unwrap();
            retracts += 1;
        } else {
            let (symbol, args, cs) = open.choose(&mut rng).unwrap();
            let value = cs.choose(&mut rng).unwrap().clone();
            s = c
                .set(&s, &SetRequest { symbol: symbol.clone(), args: args.clone(), value: value.clone() })
                .unwrap_or_else(|e| panic!("step {step}: offered {symbol} = {value} rejected: {e}"));
            sets += 1;
        }
        assert_eq!(s.view.status, Status::Consistent, "step {step}: {:?}", s.view.choices);
    }
    format!("1000 steps ({sets} sets, {retracts} retractions), never inconsistent")
}

// -- latency -------------------------------------------------------------------

fn latency() -> String {
    let start = Instant::now();
    let c = full_consultant();
    let mut s = c.initial().unwrap();
    assert_eq!(s.view.remaining.count, 55);
    let steps = [
        ("MinOperatingTemp", "-20"),
        ("MaxOperatingTemp", "80"),
        ("MinBondStrength", "10"),
        ("WaterExposure", "true"),
        ("SubstrateA", "aluminium"),
        ("SubstrateB", "steel"),
        ("MaxPrice", "150"),
        ("Support", "floating"),
        ("MaxApplicationTemp", "38"),
    ];
    let mut slowest_prop = Duration::ZERO;
    let mut slowest_step = Duration::ZERO;
    let mut counts = vec![s.view.remaining.count];
    for (sym, v) in steps {
        let t = Instant::now();
        let next = c.set(&s, &req(sym, v)).unwrap_or_else(|e| panic!("{sym} = {v}: {e}"));
        slowest_step = slowest_step.max(t.elapsed());
        let t = Instant::now();
        let mut st = c.kb().structure.clone();
        st.assignments.extend(next.user.iter().cloned());
        let r = propagate(c.ground_problem(), &st, &c.budget()).unwrap();
        let took = t.elapsed();
        slowest_prop = slowest_prop.max(took);
        assert!(took < Duration::from_secs(2), "propagation after {sym} took {took:?}");
        assert_eq!(r.status, Status::Consistent, "{sym}");
        assert!(next.view.remaining.count <= s.view.remaining.count);
        counts.push(next.view.remaining.count);
        s = next;
    }
    let total = start.elapsed();
    assert!(total < Duration::from_secs(180), "session took {total:?}");
    format!(
        "remaining {counts:?}, slowest propagation {slowest_prop:.2?}, slowest full step {slowest_step:.2?}, total {total:.1?}"
    )
}

// -- determinism ---------------------------------------------------------------

fn view_json(v: &StateView) -> String {
    serde_json::to_string(v).unwrap()
}

fn determinism() -> String {
    let a = generate_synthetic_catalog(1);
    let b = generate_synthetic_catalog(1);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_ne!(a.to_csv(), generate_synthetic_catalog(2).to_csv(), "seed matters");
    let ka = build_kb(&a, &RequirementSchema::standard()).unwrap();
    let kb = build_kb(&b, &RequirementSchema::standard()).unwrap();
    assert_eq!(
        serialize(&ka.vocabulary, &ka.theory, &ka.structure),
        serialize(&kb.vocabulary, &kb.theory, &kb.structure)
    );

    let log = [("MinOperatingTemp", "-10"), ("WaterExposure", "true"), ("MaxPrice", "120"), ("MinBondStrength", "12")];
    let run = || {
        let c = full_consultant();
        let mut s = c.initial().unwrap();
        let mut views = vec![view_json(&s.view)];
        for (sym, v) in log {
            s = c.set(&s, &req(sym, v)).unwrap();
            views.push(view_json(&s.view));
        }
        let replayed = c.replay(&s.user).unwrap();
        assert_eq!(view_json(&replayed.view), *views.last().unwrap(), "replay differs from the live session");
        views
    };
    let first = run();
    assert_eq!(first, run());
    format!("catalog, KB text and {} StateViews byte-identical across runs", first.len())
}
