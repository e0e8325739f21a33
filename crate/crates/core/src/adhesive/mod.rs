//! The adhesive-selection knowledge base.
//!
//! A catalog of adhesives, their families and substrates becomes given
//! interpretations of stored-value functions. For every adhesive parameter
//! the theory decides which value constraints see: the adhesive's own
//! value when known, else its family's, and when neither is known every
//! constraint on the parameter is switched off through `Known(p)`.

mod catalog;
mod schema;

use std::collections::BTreeSet;

use thiserror::Error;

pub use catalog::{
    generate_catalog, generate_synthetic_catalog, is_unknown, AdhesiveRecord, Catalog, CatalogError, CatalogFiles,
    Dims, FamilyRecord, SubstrateRecord, ADHESIVES_FILE, FAMILIES_FILE, SUBSTRATES_FILE,
};
pub use schema::{
    adhesive_param, substrate_param, ParamDef, ParamKind, ADHESIVE_PARAMS, SENTINEL, STORED_TYPE, SUBSTRATE_PARAMS,
    UNKNOWN,
};

use crate::cdmn::{compile_tables, parse_tables, CdmnError};
use crate::ground::GroundProblem;
use crate::model::{
    well_formed, Assignment, Category, PartialStructure, SymbolDecl, Theory, TypeDecl, ValidationError, Value,
    Vocabulary, BOOL_TYPE,
};
use crate::parser::{parse_formula, KnowledgeBase, ParseDiagnostic};
use crate::rational::Rat;
use crate::solve::{propagate, Budget, Domain, PropagationResult, SolveError, Status};

/// The shipped decision tables.
pub const TABLES: &str = include_str!("tables.cdmn");

pub const ADHESIVE_TYPE: &str = "AdhesiveId";
pub const FAMILY_TYPE: &str = "FamilyId";
pub const SUBSTRATE_TYPE: &str = "SubstrateId";
pub const PARAM_TYPE: &str = "Param";
/// The selected adhesive.
pub const SELECTION: &str = "Adhesive";
pub const FAMILY_OF: &str = "FamilyOf";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Requirement {
    pub symbol: &'static str,
    pub ty: &'static str,
    pub label: &'static str,
    pub category: Category,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Law {
    pub id: &'static str,
    pub label: &'static str,
    pub text: &'static str,
}

/// User-facing requirement symbols, their types, the laws tying them to
/// the effective adhesive values, and the decision tables.
#[derive(Clone, Debug)]
pub struct RequirementSchema {
    pub types: Vec<TypeDecl>,
    pub requirements: Vec<Requirement>,
    pub laws: Vec<Law>,
    pub tables: String,
}

const fn req(symbol: &'static str, ty: &'static str, label: &'static str, category: Category) -> Requirement {
    Requirement { symbol, ty, label, category }
}

const fn law(id: &'static str, label: &'static str, text: &'static str) -> Law {
    Law { id, label, text }
}

impl RequirementSchema {
    pub fn standard() -> Self {
        use Category::*;
        let r = |lo: i64, hi: i64| (Rat::from_int(lo), Rat::from_int(hi));
        let real = |name: &str, (lo, hi): (Rat, Rat)| TypeDecl::real(name, lo, hi);
        let types = vec![
            real("Temp", r(-100, 300)),
            real("Stress", r(0, 100)),
            real("Money", r(0, 1000)),
            real("Minutes", r(0, 10000)),
            real("Viscous", r(0, 1000)),
            real("Length", r(0, 10)),
            TypeDecl::real("Thickness", Rat::new(1, 100), Rat::from_int(10)),
            real("Ratio", r(0, 1000)),
            real("Swing", r(-400, 400)),
            real("Mismatch", r(-200, 200)),
            TypeDecl::enumeration("SupportKind", &["fixed", "floating"]),
        ];
        let requirements = vec![
            req("MinBondStrength", "Stress", "Minimum bond strength (MPa)", Performance),
            req("MaxStress", STORED_TYPE, "Stress the bond can take (MPa)", Performance),
            req("MinOperatingTemp", "Temp", "Minimum operating temperature (°C)", Performance),
            req("MaxOperatingTemp", "Temp", "Maximum operating temperature (°C)", Performance),
            req("MinElongation", "Ratio", "Required elongation (ratio)", Performance),
            req("WaterExposure", BOOL_TYPE, "Exposed to water", Performance),
            req("SolventExposure", BOOL_TYPE, "Exposed to solvents", Performance),
            req("UvExposure", BOOL_TYPE, "Exposed to sunlight", Performance),
            req("MinApplicationTemp", "Temp", "Minimum application temperature (°C)", Production),
            req("MaxApplicationTemp", "Temp", "Maximum application temperature (°C)", Production),
            req("MaxPrice", "Money", "Maximum price per kg", Production),
            req("MaxViscosity", "Viscous", "Maximum viscosity (Pa·s)", Production),
            req("MaxCureTime", "Minutes", "Maximum cure time (min)", Production),
            req("MinPotLife", "Minutes", "Minimum pot life (min)", Production),
            req("HeatCuringAvailable", BOOL_TYPE, "Oven curing available", Production),
            req("UvCuringAvailable", BOOL_TYPE, "UV curing available", Production),
            req("Transparent", BOOL_TYPE, "Transparent bond line", Production),
            req("FoodContact", BOOL_TYPE, "Food contact", Production),
            req("Support", "SupportKind", "Support", Bond),
            req("deltaLength", "Length", "Length change of the joint (mm)", Bond),
            req("BondThickness", "Thickness", "Bond thickness (mm)", Bond),
            req("GapFill", BOOL_TYPE, "Gap must be filled", Bond),
            req("TempSwing", "Swing", "Operating temperature swing (°C)", Bond),
            req("CTEMismatch", "Mismatch", "Expansion mismatch A − B (µm/m·K)", Bond),
            req("SubstrateA", SUBSTRATE_TYPE, "Substrate A", SubstrateA),
            req("SubstrateB", SUBSTRATE_TYPE, "Substrate B", SubstrateB),
        ];
        let mut laws = vec![
            law("operating_order", "Minimum operating temperature cannot exceed the maximum", "MinOperatingTemp =< MaxOperatingTemp"),
            law("application_order", "Minimum application temperature cannot exceed the maximum", "MinApplicationTemp =< MaxApplicationTemp"),
            law("service_min", "The adhesive must survive the lowest operating temperature", "Known(service_min) => ServiceTempMin =< MinOperatingTemp"),
            law("service_max", "The adhesive must survive the highest operating temperature", "Known(service_max) => ServiceTempMax >= MaxOperatingTemp"),
            law("application_min", "The adhesive must be applicable at the lowest application temperature", "Known(application_min) => ApplicationTempMin =< MinApplicationTemp"),
            law("application_max", "The adhesive must be applicable at the highest application temperature", "Known(application_max) => ApplicationTempMax >= MaxApplicationTemp"),
            law("elongation", "The adhesive must stretch as far as the joint requires", "Known(elongation) => Elongation >= MinElongation"),
            law("price", "The adhesive must fit the budget", "Known(price) => Price =< MaxPrice"),
            law("viscosity", "The adhesive must not be too viscous to apply", "Known(viscosity) => Viscosity =< MaxViscosity"),
            law("cure_time", "The adhesive must cure in the available time", "Known(cure_time) => CureTime =< MaxCureTime"),
            law("pot_life", "The adhesive must stay workable long enough", "Known(pot_life) => PotLife >= MinPotLife"),
            law("gap_size", "The adhesive must bridge the bond thickness", "Known(max_gap) => MaxGap >= BondThickness"),
            law("gap_fill", "Filling a gap needs a gap filling adhesive", "GapFill & Known(gap_filling) => GapFilling = yes"),
            law("heat_cure", "Heat curing needs an oven", "~HeatCuringAvailable & Known(cure) => CureMechanism ~= heat"),
            law("uv_cure", "UV curing needs a UV lamp", "~UvCuringAvailable & Known(cure) => CureMechanism ~= uv"),
            law("uv_window", "UV curing needs a transparent substrate", "Known(cure) & CureMechanism = uv => TransparentSubstrate(SubstrateA) = yes | TransparentSubstrate(SubstrateB) = yes"),
            law("water", "Water exposure needs good water resistance", "WaterExposure & Known(water) => WaterResistance = good"),
            law("solvent", "Solvent exposure rules out poor solvent resistance", "SolventExposure & Known(solvent) => SolventResistance ~= poor"),
            law("uv", "Sunlight rules out poor UV resistance", "UvExposure & Known(uv) => UvResistance ~= poor"),
            law("colour", "A transparent bond line needs a clear adhesive", "Transparent & Known(color) => Color = clear"),
            law("food", "Food contact needs a food safe adhesive", "FoodContact & Known(food_safe) => FoodSafe = yes"),
        ];
        laws.extend(substrate_laws());
        RequirementSchema { types, requirements, laws, tables: TABLES.to_string() }
    }
}

fn substrate_laws() -> Vec<Law> {
    // Written out per side so each law keeps a static label.
    vec![
        law("low_energy_a", "Low energy substrate A needs an adhesive for low energy plastics", "SurfaceEnergy(SubstrateA) ~= -1000 & SurfaceEnergy(SubstrateA) < 36 & Known(low_energy) => LowEnergyBonding = yes"),
        law("low_energy_b", "Low energy substrate B needs an adhesive for low energy plastics", "SurfaceEnergy(SubstrateB) ~= -1000 & SurfaceEnergy(SubstrateB) < 36 & Known(low_energy) => LowEnergyBonding = yes"),
        law("solvent_attack_a", "Substrate A is attacked by solvent based adhesives", "SolventSensitive(SubstrateA) = yes & Known(solvent_based) => SolventBased = no"),
        law("solvent_attack_b", "Substrate B is attacked by solvent based adhesives", "SolventSensitive(SubstrateB) = yes & Known(solvent_based) => SolventBased = no"),
        law("flexible_a", "Flexible substrate A rules out rigid adhesives", "FlexibleSubstrate(SubstrateA) = yes & Known(flexibility) => Flexibility ~= rigid"),
        law("flexible_b", "Flexible substrate B rules out rigid adhesives", "FlexibleSubstrate(SubstrateB) = yes & Known(flexibility) => Flexibility ~= rigid"),
        law("porous_a", "Porous substrate A soaks up thin adhesives", "Porous(SubstrateA) = yes & Known(viscosity) => Viscosity >= 1"),
        law("porous_b", "Porous substrate B soaks up thin adhesives", "Porous(SubstrateB) = yes & Known(viscosity) => Viscosity >= 1"),
        law("absorbing_a", "Water absorbing substrate A rules out poor water resistance", "WaterAbsorption(SubstrateA) > 5 & Known(water) => WaterResistance ~= poor"),
        law("absorbing_b", "Water absorbing substrate B rules out poor water resistance", "WaterAbsorption(SubstrateB) > 5 & Known(water) => WaterResistance ~= poor"),
        law("substrate_temp_a", "Substrate A must survive the highest operating temperature", "SubstrateMaxTemp(SubstrateA) ~= -1000 => MaxOperatingTemp =< SubstrateMaxTemp(SubstrateA)"),
        law("substrate_temp_b", "Substrate B must survive the highest operating temperature", "SubstrateMaxTemp(SubstrateB) ~= -1000 => MaxOperatingTemp =< SubstrateMaxTemp(SubstrateB)"),
    ]
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid catalog: {}", join(.0))]
    Catalog(Vec<CatalogError>),
    #[error("schema does not fit the catalog: {0}")]
    Schema(String),
    #[error("law `{id}`: {}", join(.diagnostics))]
    Law { id: String, diagnostics: Vec<ParseDiagnostic> },
    #[error(transparent)]
    Tables(#[from] CdmnError),
    #[error("ill-formed knowledge base: {}", join(.0))]
    Invalid(Vec<ValidationError>),
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

fn with_unknown(levels: &[&str]) -> Vec<String> {
    levels.iter().map(|s| s.to_string()).chain([UNKNOWN.to_string()]).collect()
}

fn vocabulary(catalog: &Catalog, schema: &RequirementSchema) -> Result<Vocabulary, BuildError> {
    let mut voc = Vocabulary::new();
    let ids = |xs: Vec<&str>| xs.into_iter().map(String::from).collect::<Vec<_>>();
    let (lo, hi) = schema::STORED_RANGE;
    voc.types.push(TypeDecl::real(STORED_TYPE, Rat::parse(lo).expect("bound"), Rat::parse(hi).expect("bound")));
    let enumeration = |name: &str, cs: Vec<String>| {
        let refs: Vec<&str> = cs.iter().map(String::as_str).collect();
        TypeDecl::enumeration(name, &refs)
    };
    voc.types.push(enumeration(ADHESIVE_TYPE, ids(catalog.adhesives.iter().map(|a| a.id.as_str()).collect())));
    voc.types.push(enumeration(FAMILY_TYPE, ids(catalog.families.iter().map(|f| f.id.as_str()).collect())));
    voc.types.push(enumeration(SUBSTRATE_TYPE, ids(catalog.substrates.iter().map(|s| s.id.as_str()).collect())));
    voc.types.push(enumeration(PARAM_TYPE, ids(ADHESIVE_PARAMS.iter().map(|p| p.id).collect())));
    let mut seen = BTreeSet::new();
    for def in ADHESIVE_PARAMS.iter().chain(&SUBSTRATE_PARAMS) {
        if let ParamKind::Discrete { ty, levels } = def.kind {
            if seen.insert(ty) {
                voc.types.push(enumeration(ty, with_unknown(levels)));
            }
        }
    }
    for t in &schema.types {
        if voc.type_decl(&t.name).is_some() {
            return Err(BuildError::Schema(format!("type `{}` is declared twice", t.name)));
        }
        voc.types.push(t.clone());
    }

    let hidden =
        |name: &str, args: &[&str], result: &str| SymbolDecl::new(name, args, result).with_category(Category::Hidden);
    voc.symbols.push(hidden(SELECTION, &[], ADHESIVE_TYPE).with_label("Selected adhesive"));
    voc.symbols.push(hidden(FAMILY_OF, &[ADHESIVE_TYPE], FAMILY_TYPE));
    for s in ["Known", "KnownAdhesive", "KnownFamily"] {
        voc.symbols.push(hidden(s, &[PARAM_TYPE], BOOL_TYPE));
    }
    for def in &ADHESIVE_PARAMS {
        let ty = def.value_type();
        voc.symbols.push(hidden(&def.adhesive_symbol(), &[ADHESIVE_TYPE], ty));
        voc.symbols.push(hidden(&def.family_symbol(), &[FAMILY_TYPE], ty));
        voc.symbols.push(SymbolDecl::new(def.effective, &[], ty).with_category(def.category).with_label(def.label));
    }
    for def in &SUBSTRATE_PARAMS {
        voc.symbols.push(hidden(def.stem, &[SUBSTRATE_TYPE], def.value_type()).with_label(def.label));
    }
    for r in &schema.requirements {
        if voc.symbol(r.symbol).is_some() {
            return Err(BuildError::Schema(format!("requirement `{}` clashes with a catalog symbol", r.symbol)));
        }
        if voc.type_decl(r.ty).is_none() && r.ty != BOOL_TYPE {
            return Err(BuildError::Schema(format!("requirement `{}` has unknown type `{}`", r.symbol, r.ty)));
        }
        voc.symbols.push(SymbolDecl::new(r.symbol, &[], r.ty).with_category(r.category).with_label(r.label));
    }
    Ok(voc)
}

/// The per-parameter fallback axioms, in theory order.
fn fallback_laws(def: &ParamDef) -> [(String, String, String); 4] {
    let (id, eff, unk) = (def.id, def.effective, def.unknown_literal());
    let (own, fam) = (def.adhesive_symbol(), def.family_symbol());
    let label = def.label.split(" (").next().unwrap_or(def.label);
    [
        (
            format!("known_adhesive_{id}"),
            format!("{label} is known for an adhesive unless stored as {unk}"),
            format!("KnownAdhesive({id}) <=> {own}({SELECTION}) ~= {unk}"),
        ),
        (
            format!("known_family_{id}"),
            format!("{label} is known for a family unless stored as {unk}"),
            format!("KnownFamily({id}) <=> {fam}({FAMILY_OF}({SELECTION})) ~= {unk}"),
        ),
        (
            format!("own_{id}"),
            format!("{label} is the adhesive's own value when known"),
            format!("KnownAdhesive({id}) => {eff} = {own}({SELECTION})"),
        ),
        (
            format!("family_{id}"),
            format!("{label} falls back to the family value"),
            format!("~KnownAdhesive({id}) => {eff} = {fam}({FAMILY_OF}({SELECTION}))"),
        ),
    ]
}

/// Builds the knowledge base. The catalog goes into the structure as given
/// values; the theory holds the fallback axioms, the schema's laws and the
/// compiled tables.
pub fn build_kb(catalog: &Catalog, schema: &RequirementSchema) -> Result<KnowledgeBase, BuildError> {
    let errors = catalog.validate();
    if !errors.is_empty() {
        return Err(BuildError::Catalog(errors));
    }
    let voc = vocabulary(catalog, schema)?;

    let mut texts: Vec<(String, String, String)> = vec![(
        "known".into(),
        "A parameter is known when the adhesive or its family knows it".into(),
        format!("!p in {PARAM_TYPE}: Known(p) <=> KnownAdhesive(p) | KnownFamily(p)"),
    )];
    for def in &ADHESIVE_PARAMS {
        texts.extend(fallback_laws(def));
    }
    texts.extend(schema.laws.iter().map(|l| (l.id.to_string(), l.label.to_string(), l.text.to_string())));
    let mut theory = Theory::new();
    for (id, label, text) in texts {
        let f =
            parse_formula(&text, &voc, &id).map_err(|diagnostics| BuildError::Law { id: id.clone(), diagnostics })?;
        theory.push(&id, &label, f);
    }
    let tables = parse_tables(&schema.tables, "tables.cdmn").map_err(CdmnError::Diagnostics)?;
    theory.formulas.extend(compile_tables(&tables, &voc)?.formulas);

    let mut st = PartialStructure::new();
    for a in &catalog.adhesives {
        let arg = vec![Value::sym(&a.id)];
        st.push(Assignment::given(FAMILY_OF, arg.clone(), Value::sym(&a.family)));
        for def in &ADHESIVE_PARAMS {
            st.push(Assignment::given(&def.adhesive_symbol(), arg.clone(), a.params[def.id].clone()));
        }
    }
    for f in &catalog.families {
        for def in &ADHESIVE_PARAMS {
            st.push(Assignment::given(&def.family_symbol(), vec![Value::sym(&f.id)], f.params[def.id].clone()));
        }
    }
    for s in &catalog.substrates {
        for def in &SUBSTRATE_PARAMS {
            st.push(Assignment::given(def.stem, vec![Value::sym(&s.id)], s.params[def.id].clone()));
        }
    }
    let errors = well_formed(&voc, &theory, &st);
    if !errors.is_empty() {
        return Err(BuildError::Invalid(errors));
    }
    Ok(KnowledgeBase { vocabulary: voc, theory, structure: st })
}

/// The adhesive parameter whose effective value `symbol` holds.
pub fn param_of(symbol: &str) -> Option<&'static ParamDef> {
    ADHESIVE_PARAMS.iter().find(|p| p.effective == symbol)
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Remaining {
    pub count: usize,
    pub ids: Vec<String>,
}

/// Adhesives still possible after propagation, in catalog order.
pub fn remaining_in(gp: &GroundProblem, prop: &PropagationResult) -> Remaining {
    let key = crate::model::Key::constant(SELECTION);
    let order: Vec<Value> = gp.vocabulary.type_decl(ADHESIVE_TYPE).and_then(|t| t.values()).unwrap_or_default();
    let ids: Vec<String> = match (prop.status, prop.domains.get(&key)) {
        (Status::Consistent, Some(Domain::Finite(vs))) => {
            order.iter().filter(|v| vs.contains(v)).map(|v| v.to_string()).collect()
        }
        _ => Vec::new(),
    };
    Remaining { count: ids.len(), ids }
}

/// Propagates `st` and reports the adhesives that survive.
pub fn remaining_adhesives(
    gp: &GroundProblem,
    st: &PartialStructure,
    budget: &Budget,
) -> Result<Remaining, SolveError> {
    Ok(remaining_in(gp, &propagate(gp, st, budget)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::ground;
    use crate::parser::{parse_kb, serialize};

    fn record(id: &str, family: &str, strength: i64) -> AdhesiveRecord {
        let base = &generate_catalog(0, Dims { adhesives: 1, families: 1, substrates: 0 }).adhesives[0];
        let mut params = base.params.clone();
        params.insert("strength".into(), Value::int(strength));
        params.insert("cure".into(), Value::sym("mixing"));
        AdhesiveRecord { id: id.into(), family: family.into(), params }
    }

    /// Two families and three adhesives differing only in strength.
    fn fixture() -> Catalog {
        let mut c = generate_catalog(0, Dims { adhesives: 0, families: 2, substrates: 2 });
        c.families[0].params.insert("strength".into(), Value::int(12));
        c.families[1].params.insert("strength".into(), Value::int(SENTINEL));
        let (f0, f1) = (c.families[0].id.clone(), c.families[1].id.clone());
        c.adhesives = vec![record("a1", &f0, 15), record("a2", &f0, SENTINEL), record("a3", &f1, SENTINEL)];
        c
    }

    fn remaining_with(cat: &Catalog, min_strength: i64) -> Vec<String> {
        let kb = build_kb(cat, &RequirementSchema::standard()).unwrap();
        let gp = ground(&kb.vocabulary, &kb.theory, &kb.structure).unwrap();
        let mut st = kb.structure.clone();
        st.push(Assignment::user("MinBondStrength", vec![], Value::int(min_strength)));
        remaining_adhesives(&gp, &st, &Budget::default()).unwrap().ids
    }

    #[test]
    fn strength_fallback_cases() {
        let cat = fixture();
        assert_eq!(remaining_with(&cat, 10), ["a1", "a2", "a3"]);
        // a2 falls back to its family's 12, a3 has no strength at all.
        assert_eq!(remaining_with(&cat, 14), ["a1", "a3"]);
        assert_eq!(remaining_with(&cat, 16), ["a3"]);
    }

    #[test]
    fn full_kb_builds_and_round_trips() {
        let kb = build_kb(&generate_synthetic_catalog(1), &RequirementSchema::standard()).unwrap();
        let text = serialize(&kb.vocabulary, &kb.theory, &kb.structure);
        let back = parse_kb(&text).unwrap();
        assert_eq!(back.theory, kb.theory);
        assert_eq!(back.structure, kb.structure);
        assert!(kb.theory.get("known_family_strength").is_some());
        assert!(kb.theory.formulas.iter().any(|f| f.label == "Calculation of MinElongation : row 1"));
    }

    #[test]
    fn empty_session_keeps_every_adhesive() {
        let kb = build_kb(&generate_synthetic_catalog(1), &RequirementSchema::standard()).unwrap();
        let gp = ground(&kb.vocabulary, &kb.theory, &kb.structure).unwrap();
        let r = remaining_adhesives(&gp, &kb.structure, &Budget::default()).unwrap();
        assert_eq!(r.count, 55);
        assert_eq!(r.ids[0], "adh01");
    }

    #[test]
    fn requirement_clash_is_a_schema_error() {
        let mut schema = RequirementSchema::standard();
        schema.requirements.push(req("BondStrength", "Stress", "dup", Category::Bond));
        assert!(matches!(build_kb(&fixture(), &schema), Err(BuildError::Schema(_))));
    }
}
