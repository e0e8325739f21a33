mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use kbsel::adhesive::{build_kb, generate_catalog, remaining_adhesives, Catalog, Dims, RequirementSchema};
use kbsel::consultant::{ConsultError, Consultant, SetRequest, TileKind};
use kbsel::ground::{ground, GroundProblem};
use kbsel::model::TypeKind;
use kbsel::solve::{Budget, Status};
use kbsel::{parse_kb, serialize, Assignment, PartialStructure, Rat, Value};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::random_kb;

/// Requirement choices on the mini catalog: per symbol, the values a
/// scenario may pick from.
fn pool() -> Vec<(&'static str, Vec<Value>)> {
    let n = |xs: &[&str]| xs.iter().map(|x| Value::Num(Rat::parse(x).unwrap())).collect::<Vec<_>>();
    let b = || vec![Value::Bool(true), Value::Bool(false)];
    let subs = || ["sub0", "sub1", "sub2"].iter().map(|s| Value::sym(s)).collect::<Vec<_>>();
    vec![
        ("SubstrateA", subs()),
        ("SubstrateB", subs()),
        ("MinOperatingTemp", n(&["-40", "0", "20"])),
        ("MaxOperatingTemp", n(&["60", "120", "200"])),
        ("MinApplicationTemp", n(&["5", "15"])),
        ("MaxApplicationTemp", n(&["25", "40"])),
        ("MinBondStrength", n(&["5", "15", "30"])),
        ("MaxPrice", n(&["30", "80"])),
        ("MaxViscosity", n(&["20", "200"])),
        ("MaxCureTime", n(&["30", "600"])),
        ("MinPotLife", n(&["10", "60"])),
        ("Support", vec![Value::sym("fixed"), Value::sym("floating")]),
        ("deltaLength", n(&["0.1", "0.5"])),
        ("BondThickness", n(&["0.5", "2"])),
        ("WaterExposure", b()),
        ("SolventExposure", b()),
        ("UvExposure", b()),
        ("HeatCuringAvailable", b()),
        ("UvCuringAvailable", b()),
        ("Transparent", b()),
        ("FoodContact", b()),
        ("GapFill", b()),
    ]
}

/// Picks an optional value per pool symbol; 0 leaves it open.
fn scenario(picks: &[u8], order: &[usize]) -> Vec<Assignment> {
    let pool = pool();
    order
        .iter()
        .filter_map(|&i| {
            let (sym, vals) = &pool[i];
            let k = picks[i] as usize % (vals.len() + 1);
            (k > 0).then(|| Assignment::user(sym, vec![], vals[k - 1].clone()))
        })
        .collect()
}

fn scenario_strategy() -> impl Strategy<Value = Vec<Assignment>> {
    let n = pool().len();
    (prop::collection::vec(any::<u8>(), n), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
        .prop_map(|(picks, order)| scenario(&picks, &order))
}

fn unknown_like(v: &Value) -> Value {
    if v.as_num().is_some() {
        Value::int(-1000)
    } else {
        Value::sym("unknown")
    }
}

/// A mini catalog plus `blank`, an adhesive in a family of its own that
/// knows nothing at all.
fn mini() -> &'static (Catalog, GroundProblem, PartialStructure) {
    static MINI: OnceLock<(Catalog, GroundProblem, PartialStructure)> = OnceLock::new();
    MINI.get_or_init(|| {
        let mut cat = generate_catalog(9, Dims { adhesives: 6, families: 3, substrates: 3 });
        for (s, id) in cat.substrates.iter_mut().zip(["sub0", "sub1", "sub2"]) {
            s.id = id.into();
        }
        let mut fam = cat.families[0].clone();
        fam.id = "fblank".into();
        fam.params.values_mut().for_each(|v| *v = unknown_like(v));
        let mut adh = cat.adhesives[0].clone();
        adh.id = "blank".into();
        adh.family = "fblank".into();
        adh.params.values_mut().for_each(|v| *v = unknown_like(v));
        cat.families.push(fam);
        cat.adhesives.push(adh);
        let kb = build_kb(&cat, &RequirementSchema::standard()).unwrap();
        let gp = ground(&kb.vocabulary, &kb.theory, &kb.structure).unwrap();
        (cat, gp, kb.structure)
    })
}

fn remaining(st: &PartialStructure, extra: &[Assignment]) -> BTreeSet<String> {
    let (_, gp, _) = mini();
    let mut st = st.clone();
    for a in extra {
        st.push(a.clone());
    }
    remaining_adhesives(gp, &st, &Budget::default()).unwrap().ids.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// Unknown values never eliminate: an adhesive with no known value is
    /// only lost when every adhesive is.
    #[test]
    fn unknown_values_never_eliminate(reqs in scenario_strategy()) {
        let (_, _, base) = mini();
        let left = remaining(base, &reqs);
        prop_assert!(left.is_empty() || left.contains("blank"), "{left:?} for {reqs:?}");
    }

    /// Each added requirement can only shrink the remaining adhesives.
    #[test]
    fn remaining_is_antitone(reqs in scenario_strategy()) {
        let (_, _, base) = mini();
        let mut prev = remaining(base, &[]);
        for k in 1..=reqs.len() {
            let now = remaining(base, &reqs[..k]);
            prop_assert!(now.is_subset(&prev), "{:?} added {now:?} ⊄ {prev:?}", reqs[k - 1]);
            prev = now;
        }
    }
}

fn tile_values(c: &Consultant, ty: &str) -> Option<Vec<String>> {
    match &c.kb().vocabulary.type_decl(ty)?.kind {
        TypeKind::Bool => Some(vec!["true".into(), "false".into()]),
        TypeKind::Enum(cs) => Some(cs.clone()),
        _ => None,
    }
}

fn random_consultant(seed: u64) -> Option<Consultant> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kb = random_kb(&mut rng, 5_000);
    let text = serialize(&kb.vocabulary, &kb.theory, &PartialStructure::new());
    let kb = parse_kb(&text).unwrap();
    let c = Consultant::new(kb, Budget::default()).ok()?;
    (c.initial().ok()?.view.status == Status::Consistent).then_some(c)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Printing a parsed KB and parsing it back gives the same KB. The
    /// generated one is parsed once first since literal fractions fold.
    #[test]
    fn printed_kbs_parse_back(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(&mut rng, 100_000);
        let reparse = |text: &str| parse_kb(text).map_err(|e| TestCaseError::fail(format!("{e:?}\n{text}")));
        let kb = reparse(&serialize(&kb.vocabulary, &kb.theory, &kb.structure))?;
        let text = serialize(&kb.vocabulary, &kb.theory, &kb.structure);
        let back = reparse(&text)?;
        prop_assert_eq!(&back.vocabulary, &kb.vocabulary);
        prop_assert_eq!(&back.theory, &kb.theory);
        prop_assert_eq!(&back.structure, &kb.structure);
        prop_assert_eq!(serialize(&back.vocabulary, &back.theory, &back.structure), text);
    }

    /// Offered candidates are accepted and keep the session consistent;
    /// every other value of the type is refused.
    #[test]
    fn only_candidates_are_accepted(seed in any::<u64>()) {
        let Some(c) = random_consultant(seed) else { return Ok(()) };
        let s = c.initial().unwrap();
        for t in s.view.tiles.iter().filter(|t| t.kind != TileKind::Number && t.value.is_none()) {
            let (Some(cands), Some(all)) = (&t.candidates, tile_values(&c, &t.ty)) else { continue };
            for v in all {
                let req = SetRequest { symbol: t.symbol.clone(), args: t.args.clone(), value: v.clone() };
                match c.set(&s, &req) {
                    Ok(next) => {
                        prop_assert!(cands.contains(&v), "{} = {v} accepted but not offered", t.symbol);
                        prop_assert_eq!(next.view.status, Status::Consistent);
                    }
                    Err(ConsultError::NotACandidate { .. }) => prop_assert!(!cands.contains(&v), "{} = {v} refused", t.symbol),
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
    }

    /// Following offered candidates, with retractions mixed in, never
    /// reaches an inconsistent state.
    #[test]
    fn guided_walks_stay_consistent(seed in any::<u64>()) {
        let Some(c) = random_consultant(seed) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut s = c.initial().unwrap();
        for _ in 0..20 {
            let open: Vec<_> = s.view.tiles.iter()
                .filter(|t| t.kind != TileKind::Number && t.origin.is_none())
                .filter_map(|t| t.candidates.as_ref().filter(|cs| !cs.is_empty()).map(|cs| (t, cs)))
                .collect();
            if open.is_empty() || (!s.view.choices.is_empty() && rng.gen_bool(0.25)) {
                let Some(a) = s.view.choices.choose(&mut rng).cloned() else { break };
                s = c.retract(&s, &a.symbol, &a.args).unwrap();
            } else {
                let (t, cs) = open.choose(&mut rng).unwrap();
                let req = SetRequest { symbol: t.symbol.clone(), args: t.args.clone(), value: cs.choose(&mut rng).unwrap().clone() };
                s = c.set(&s, &req).unwrap();
            }
            prop_assert_eq!(s.view.status, Status::Consistent);
        }
    }
}
