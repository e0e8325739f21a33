//! Catalog records, the seeded synthetic catalog and its CSV form.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::schema::{ParamDef, ParamKind, ADHESIVE_PARAMS, SENTINEL, SUBSTRATE_PARAMS, UNKNOWN};
use crate::model::Value;
use crate::rational::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdhesiveRecord {
    pub id: String,
    pub family: String,
    /// Every adhesive parameter; `-1000` or `unknown` when not known.
    pub params: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyRecord {
    pub id: String,
    pub params: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstrateRecord {
    pub id: String,
    pub params: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Catalog {
    pub families: Vec<FamilyRecord>,
    pub adhesives: Vec<AdhesiveRecord>,
    pub substrates: Vec<SubstrateRecord>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{file}: {source}")]
    Csv { file: String, source: csv::Error },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}: unexpected column `{column}`")]
    ExtraColumn { file: String, column: String },
    #[error("{file}:{line}: `{value}` is not a valid {param}")]
    BadValue { file: String, line: u64, param: String, value: String },
    #[error("{record}: parameter `{param}` is missing")]
    MissingParam { record: String, param: String },
    #[error("{record}: `{value}` is not a valid {param}")]
    InvalidParam { record: String, param: String, value: String },
    #[error("adhesive `{adhesive}` names unknown family `{family}`")]
    UnknownFamily { adhesive: String, family: String },
    #[error("duplicate id `{0}`")]
    Duplicate(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Checks a value against a parameter; the unknown marker is allowed.
fn valid(def: &ParamDef, v: &Value) -> bool {
    match (&def.kind, v) {
        (ParamKind::Continuous { .. }, Value::Num(_)) => true,
        (ParamKind::Discrete { levels, .. }, Value::Sym(s)) => s == UNKNOWN || levels.contains(&s.as_str()),
        _ => false,
    }
}

fn check_params(record: &str, params: &BTreeMap<String, Value>, defs: &[ParamDef], errors: &mut Vec<CatalogError>) {
    for def in defs {
        match params.get(def.id) {
            None => errors.push(CatalogError::MissingParam { record: record.into(), param: def.id.into() }),
            Some(v) if !valid(def, v) => errors.push(CatalogError::InvalidParam {
                record: record.into(),
                param: def.id.into(),
                value: v.to_string(),
            }),
            _ => {}
        }
    }
}

impl Catalog {
    /// Every violated catalog invariant.
    pub fn validate(&self) -> Vec<CatalogError> {
        let mut errors = Vec::new();
        let mut seen = BTreeSet::new();
        let ids = self
            .families
            .iter()
            .map(|f| &f.id)
            .chain(self.adhesives.iter().map(|a| &a.id))
            .chain(self.substrates.iter().map(|s| &s.id));
        for id in ids {
            if !seen.insert(id) {
                errors.push(CatalogError::Duplicate(id.clone()));
            }
        }
        let families: BTreeSet<&str> = self.families.iter().map(|f| f.id.as_str()).collect();
        for f in &self.families {
            check_params(&f.id, &f.params, &ADHESIVE_PARAMS, &mut errors);
        }
        for a in &self.adhesives {
            if !families.contains(a.family.as_str()) {
                errors.push(CatalogError::UnknownFamily { adhesive: a.id.clone(), family: a.family.clone() });
            }
            check_params(&a.id, &a.params, &ADHESIVE_PARAMS, &mut errors);
        }
        for s in &self.substrates {
            check_params(&s.id, &s.params, &SUBSTRATE_PARAMS, &mut errors);
        }
        errors
    }

    pub fn family(&self, id: &str) -> Option<&FamilyRecord> {
        self.families.iter().find(|f| f.id == id)
    }

    pub fn adhesive(&self, id: &str) -> Option<&AdhesiveRecord> {
        self.adhesives.iter().find(|a| a.id == id)
    }
}

pub fn is_unknown(v: &Value) -> bool {
    match v {
        Value::Num(r) => *r == Rat::from_int(SENTINEL),
        Value::Sym(s) => s == UNKNOWN,
        Value::Bool(_) => false,
    }
}

// -- generator ---------------------------------------------------------------

pub const FAMILIES: [&str; 18] = [
    "epoxy_1k",
    "epoxy_2k",
    "epoxy_film",
    "cyanoacrylate",
    "anaerobic",
    "acrylic_2k",
    "toughened_acrylic",
    "uv_acrylate",
    "polyurethane_1k",
    "polyurethane_2k",
    "silicone",
    "ms_polymer",
    "hot_melt",
    "contact",
    "pva",
    "phenolic",
    "polysulfide",
    "butyl",
];

pub const SUBSTRATES: [(&str, &str); 31] = [
    ("aluminium", "metal"),
    ("steel", "metal"),
    ("stainless_steel", "metal"),
    ("galvanised_steel", "metal"),
    ("copper", "metal"),
    ("brass", "metal"),
    ("titanium", "metal"),
    ("abs", "plastic"),
    ("polycarbonate", "plastic"),
    ("pmma", "plastic"),
    ("pvc", "plastic"),
    ("polypropylene", "plastic"),
    ("polyethylene", "plastic"),
    ("polyamide", "plastic"),
    ("pet", "plastic"),
    ("ptfe", "plastic"),
    ("pom", "plastic"),
    ("polystyrene", "plastic"),
    ("cfrp", "composite"),
    ("gfrp", "composite"),
    ("smc", "composite"),
    ("float_glass", "glass"),
    ("borosilicate", "glass"),
    ("oak", "wood"),
    ("pine", "wood"),
    ("plywood", "wood"),
    ("mdf", "wood"),
    ("alumina", "ceramic"),
    ("porcelain", "ceramic"),
    ("epdm", "elastomer"),
    ("nbr", "elastomer"),
];

/// Catalog dimensions; [`Dims::FULL`] matches the real catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub adhesives: usize,
    pub families: usize,
    pub substrates: usize,
}

impl Dims {
    pub const FULL: Dims = Dims { adhesives: 55, families: 18, substrates: 31 };
}

/// Share of adhesive cells marked unknown.
const ADHESIVE_UNKNOWN: f64 = 0.2;
/// Share of family cells marked unknown, outside strength and temperatures.
const FAMILY_UNKNOWN: f64 = 0.25;
/// Share of substrate water absorption values marked unknown.
const SUBSTRATE_UNKNOWN: f64 = 0.1;
/// Families always know these.
const FAMILY_KNOWN: [&str; 5] = ["strength", "service_min", "service_max", "application_min", "application_max"];

fn round(x: f64, decimals: u32) -> Rat {
    Rat::parse(&format!("{x:.*}", decimals as usize)).expect("formatted decimal")
}

fn parse_bound(s: &str) -> f64 {
    s.parse().expect("schema bound")
}

/// Per-class ranges of substrate continuous parameters, as
/// (surface energy, water absorption, thermal expansion, max temperature).
fn class_ranges(class: &str) -> [(f64, f64); 4] {
    match class {
        "metal" => [(40.0, 60.0), (0.0, 0.0), (8.0, 25.0), (300.0, 400.0)],
        "plastic" => [(18.0, 45.0), (0.0, 3.0), (50.0, 200.0), (60.0, 150.0)],
        "composite" => [(35.0, 50.0), (0.1, 1.0), (0.5, 30.0), (100.0, 200.0)],
        "glass" => [(45.0, 72.0), (0.0, 0.0), (3.0, 9.0), (300.0, 400.0)],
        "wood" => [(40.0, 60.0), (8.0, 30.0), (3.0, 40.0), (80.0, 150.0)],
        "ceramic" => [(45.0, 70.0), (0.0, 5.0), (4.0, 8.0), (300.0, 400.0)],
        _ => [(20.0, 35.0), (0.0, 2.0), (100.0, 200.0), (100.0, 150.0)],
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, levels: &[&'a str]) -> &'a str {
    // u32, since usize ranges draw differently on 32-bit targets such as wasm
    levels[rng.gen_range(0..levels.len() as u32) as usize]
}

/// The full-size synthetic catalog: 55 adhesives in 18 families and 31
/// substrates. The same seed always gives the same catalog.
pub fn generate_synthetic_catalog(seed: u64) -> Catalog {
    generate_catalog(seed, Dims::FULL)
}

/// A synthetic catalog of the given size.
///
/// Each family gets a centre value per parameter drawn uniformly from the
/// schema range; its adhesives scatter around it by up to 15% of the range.
/// Discrete values follow the family level 70% of the time.
pub fn generate_catalog(seed: u64, dims: Dims) -> Catalog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nfam = dims.families.clamp(1, FAMILIES.len());
    let mut centres: Vec<BTreeMap<&str, f64>> = Vec::new();
    let mut families = Vec::new();
    for &name in &FAMILIES[..nfam] {
        let mut centre = BTreeMap::new();
        let mut params = BTreeMap::new();
        for def in &ADHESIVE_PARAMS {
            let v = match def.kind {
                ParamKind::Continuous { lo, hi, decimals, .. } => {
                    let (lo, hi) = (parse_bound(lo), parse_bound(hi));
                    let c = rng.gen_range(lo..=hi);
                    centre.insert(def.id, c);
                    Value::Num(round(c, decimals))
                }
                ParamKind::Discrete { levels, .. } => Value::sym(pick(&mut rng, levels)),
            };
            let known = FAMILY_KNOWN.contains(&def.id) || !rng.gen_bool(FAMILY_UNKNOWN);
            params.insert(def.id.to_string(), if known { v } else { unknown(def) });
        }
        centres.push(centre);
        families.push(FamilyRecord { id: name.to_string(), params });
    }

    let mut adhesives = Vec::new();
    for i in 0..dims.adhesives {
        // Every family gets at least one member before any gets a second.
        let f = if i < nfam { i } else { rng.gen_range(0..nfam as u32) as usize };
        let family = &families[f];
        let mut params = BTreeMap::new();
        for def in &ADHESIVE_PARAMS {
            let v = match def.kind {
                ParamKind::Continuous { lo, hi, decimals, .. } => {
                    let (lo, hi) = (parse_bound(lo), parse_bound(hi));
                    let spread = 0.15 * (hi - lo);
                    let x = centres[f][def.id] + rng.gen_range(-spread..=spread);
                    Value::Num(round(x.clamp(lo, hi), decimals))
                }
                ParamKind::Discrete { levels, .. } => {
                    let inherited = &family.params[def.id];
                    if rng.gen_bool(0.7) && !is_unknown(inherited) {
                        inherited.clone()
                    } else {
                        Value::sym(pick(&mut rng, levels))
                    }
                }
            };
            let v = if rng.gen_bool(ADHESIVE_UNKNOWN) { unknown(def) } else { v };
            params.insert(def.id.to_string(), v);
        }
        adhesives.push(AdhesiveRecord { id: format!("adh{:02}", i + 1), family: family.id.clone(), params });
    }

    let mut substrates = Vec::new();
    for i in 0..dims.substrates {
        let (name, class) = SUBSTRATES[i % SUBSTRATES.len()];
        let id = if i < SUBSTRATES.len() { name.to_string() } else { format!("{name}_{}", i / SUBSTRATES.len()) };
        let ranges = class_ranges(class);
        let mut params = BTreeMap::new();
        let mut ci = 0;
        for def in &SUBSTRATE_PARAMS {
            let v = match def.kind {
                ParamKind::Continuous { decimals, .. } => {
                    let (lo, hi) = ranges[ci];
                    ci += 1;
                    let x = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                    Value::Num(round(x, decimals))
                }
                ParamKind::Discrete { levels, .. } => Value::sym(match def.id {
                    "material" => class,
                    "porous" => match class {
                        "wood" => "yes",
                        "ceramic" => pick(&mut rng, levels),
                        _ => "no",
                    },
                    "solvent_sensitive" => match class {
                        "plastic" | "elastomer" if rng.gen_bool(0.7) => "yes",
                        _ => "no",
                    },
                    "flexible" => match class {
                        "elastomer" => "yes",
                        "plastic" => pick(&mut rng, levels),
                        _ => "no",
                    },
                    "transparent" => match class {
                        "glass" => "yes",
                        "plastic" => pick(&mut rng, levels),
                        _ => "no",
                    },
                    _ => pick(&mut rng, levels),
                }),
            };
            let v = if def.id == "water_absorption" && rng.gen_bool(SUBSTRATE_UNKNOWN) { unknown(def) } else { v };
            params.insert(def.id.to_string(), v);
        }
        substrates.push(SubstrateRecord { id, params });
    }
    Catalog { families, adhesives, substrates }
}

fn unknown(def: &ParamDef) -> Value {
    match def.kind {
        ParamKind::Continuous { .. } => Value::int(SENTINEL),
        ParamKind::Discrete { .. } => Value::sym(UNKNOWN),
    }
}

// -- CSV ---------------------------------------------------------------------

pub const ADHESIVES_FILE: &str = "adhesives.csv";
pub const FAMILIES_FILE: &str = "families.csv";
pub const SUBSTRATES_FILE: &str = "substrates.csv";

fn cell_text(v: &Value) -> String {
    match v {
        Value::Num(r) => r.to_decimal_string(),
        other => other.to_string(),
    }
}

fn write_table<'a>(
    lead: &[&str],
    defs: &[ParamDef],
    rows: impl Iterator<Item = (Vec<&'a str>, &'a BTreeMap<String, Value>)>,
) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let header: Vec<&str> = lead.iter().copied().chain(defs.iter().map(|d| d.id)).collect();
    w.write_record(&header).expect("in-memory write");
    for (ids, params) in rows {
        let mut rec: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
        rec.extend(defs.iter().map(|d| params.get(d.id).map(cell_text).unwrap_or_default()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn read_table(
    text: &str,
    file: &str,
    lead: &[&str],
    defs: &[ParamDef],
) -> Result<Vec<(Vec<String>, BTreeMap<String, Value>)>, CatalogError> {
    let csv_err = |source| CatalogError::Csv { file: file.into(), source };
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    let pos = |name: &str| header.iter().position(|h| h == name);
    let mut lead_pos = Vec::new();
    for &l in lead {
        lead_pos.push(pos(l).ok_or_else(|| CatalogError::MissingColumn { file: file.into(), column: l.into() })?);
    }
    let mut def_pos = Vec::new();
    for d in defs {
        def_pos.push(pos(d.id).ok_or_else(|| CatalogError::MissingColumn { file: file.into(), column: d.id.into() })?);
    }
    if let Some(extra) = header.iter().find(|h| !lead.contains(h) && !defs.iter().any(|d| d.id == *h)) {
        return Err(CatalogError::ExtraColumn { file: file.into(), column: extra.into() });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let ids = lead_pos.iter().map(|&i| rec[i].to_string()).collect();
        let mut params = BTreeMap::new();
        for (d, &i) in defs.iter().zip(&def_pos) {
            let text = &rec[i];
            let v = match d.kind {
                ParamKind::Continuous { .. } => Rat::parse(text).map(Value::Num),
                ParamKind::Discrete { .. } => Some(Value::sym(text)),
            };
            match v {
                Some(v) if valid(d, &v) => {
                    params.insert(d.id.to_string(), v);
                }
                _ => {
                    return Err(CatalogError::BadValue {
                        file: file.into(),
                        line,
                        param: d.id.into(),
                        value: text.into(),
                    })
                }
            }
        }
        out.push((ids, params));
    }
    Ok(out)
}

/// The three CSV files of a catalog.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogFiles {
    pub adhesives: String,
    pub families: String,
    pub substrates: String,
}

impl Catalog {
    pub fn to_csv(&self) -> CatalogFiles {
        CatalogFiles {
            adhesives: write_table(
                &["id", "family"],
                &ADHESIVE_PARAMS,
                self.adhesives.iter().map(|a| (vec![a.id.as_str(), a.family.as_str()], &a.params)),
            ),
            families: write_table(
                &["id"],
                &ADHESIVE_PARAMS,
                self.families.iter().map(|f| (vec![f.id.as_str()], &f.params)),
            ),
            substrates: write_table(
                &["id"],
                &SUBSTRATE_PARAMS,
                self.substrates.iter().map(|s| (vec![s.id.as_str()], &s.params)),
            ),
        }
    }

    /// Reads and validates a catalog from its CSV files.
    pub fn from_csv(files: &CatalogFiles) -> Result<Catalog, Vec<CatalogError>> {
        let one = |e| vec![e];
        let families = read_table(&files.families, FAMILIES_FILE, &["id"], &ADHESIVE_PARAMS)
            .map_err(one)?
            .into_iter()
            .map(|(mut ids, params)| FamilyRecord { id: ids.remove(0), params })
            .collect();
        let adhesives = read_table(&files.adhesives, ADHESIVES_FILE, &["id", "family"], &ADHESIVE_PARAMS)
            .map_err(one)?
            .into_iter()
            .map(|(mut ids, params)| {
                let family = ids.remove(1);
                AdhesiveRecord { id: ids.remove(0), family, params }
            })
            .collect();
        let substrates = read_table(&files.substrates, SUBSTRATES_FILE, &["id"], &SUBSTRATE_PARAMS)
            .map_err(one)?
            .into_iter()
            .map(|(mut ids, params)| SubstrateRecord { id: ids.remove(0), params })
            .collect();
        let cat = Catalog { families, adhesives, substrates };
        let errors = cat.validate();
        if errors.is_empty() {
            Ok(cat)
        } else {
            Err(errors)
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), CatalogError> {
        let io = |p: &Path| {
            let path = p.display().to_string();
            move |source| CatalogError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let files = self.to_csv();
        for (name, text) in
            [(ADHESIVES_FILE, &files.adhesives), (FAMILIES_FILE, &files.families), (SUBSTRATES_FILE, &files.substrates)]
        {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(io(&p))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Catalog, Vec<CatalogError>> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p)
                .map_err(|source| vec![CatalogError::Io { path: p.display().to_string(), source }])
        };
        Catalog::from_csv(&CatalogFiles {
            adhesives: read(ADHESIVES_FILE)?,
            families: read(FAMILIES_FILE)?,
            substrates: read(SUBSTRATES_FILE)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_catalog_dimensions() {
        let c = generate_synthetic_catalog(1);
        assert_eq!((c.adhesives.len(), c.families.len(), c.substrates.len()), (55, 18, 31));
        assert!(c.validate().is_empty());
    }

    #[test]
    fn same_seed_same_files() {
        assert_eq!(generate_synthetic_catalog(1).to_csv(), generate_synthetic_catalog(1).to_csv());
        assert_ne!(generate_synthetic_catalog(1).to_csv(), generate_synthetic_catalog(2).to_csv());
    }

    #[test]
    fn csv_round_trip() {
        let c = generate_synthetic_catalog(7);
        assert_eq!(Catalog::from_csv(&c.to_csv()).unwrap(), c);
    }

    #[test]
    fn sentinel_only_marks_unknowns() {
        let c = generate_synthetic_catalog(3);
        let unknown = c.adhesives.iter().flat_map(|a| a.params.values()).filter(|v| is_unknown(v)).count();
        let share = unknown as f64 / (55.0 * 21.0);
        assert!((0.12..0.28).contains(&share), "{share}");
        for f in &c.families {
            for p in FAMILY_KNOWN {
                assert!(!is_unknown(&f.params[p]), "{} {p}", f.id);
            }
        }
    }

    #[test]
    fn bad_cell_is_located() {
        let mut files = generate_catalog(1, Dims { adhesives: 2, families: 1, substrates: 1 }).to_csv();
        files.adhesives = files.adhesives.replacen(",-1000,", ",lots,", 1).replacen(",good,", ",lots,", 1);
        let errs = Catalog::from_csv(&files).unwrap_err();
        assert!(matches!(errs[0], CatalogError::BadValue { .. }), "{}", errs[0]);
    }
}
