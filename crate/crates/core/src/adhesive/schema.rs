//! Parameter schema of the adhesive catalog.
//!
//! Only strength, temperature resistance, elongation, water absorption and
//! solvent resistance come from the domain description; the other
//! parameters and all ranges are our own choices. Of the 32 parameters 15
//! are continuous and 17 discrete: adhesives have 11 + 10, substrates 4 + 7.

use crate::model::Category;

/// Numeric stand-in for an unknown value.
pub const SENTINEL: i64 = -1000;
/// Enumeration constant for an unknown discrete value.
pub const UNKNOWN: &str = "unknown";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Plausible range of generated values, as decimal strings, and the
    /// number of decimals they are rounded to.
    Continuous { lo: &'static str, hi: &'static str, decimals: u32, unit: &'static str },
    /// Enumeration type and its levels, `unknown` excluded.
    Discrete { ty: &'static str, levels: &'static [&'static str] },
}

impl ParamKind {
    pub fn is_continuous(&self) -> bool {
        matches!(self, ParamKind::Continuous { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamDef {
    /// Constant of the `Param` type and CSV column name.
    pub id: &'static str,
    /// Stem of the stored functions: `{stem}Adhesive`, `{stem}Family`.
    pub stem: &'static str,
    /// Symbol holding the value used in constraints.
    pub effective: &'static str,
    pub label: &'static str,
    pub category: Category,
    pub kind: ParamKind,
}

impl ParamDef {
    pub fn adhesive_symbol(&self) -> String {
        format!("{}Adhesive", self.stem)
    }

    pub fn family_symbol(&self) -> String {
        format!("{}Family", self.stem)
    }

    /// Type of the stored and effective values.
    pub fn value_type(&self) -> &'static str {
        match self.kind {
            ParamKind::Continuous { .. } => STORED_TYPE,
            ParamKind::Discrete { ty, .. } => ty,
        }
    }

    /// Literal of the unknown marker in theory text.
    pub fn unknown_literal(&self) -> String {
        match self.kind {
            ParamKind::Continuous { .. } => SENTINEL.to_string(),
            ParamKind::Discrete { .. } => UNKNOWN.to_string(),
        }
    }
}

/// Real type wide enough for every stored value and the sentinel.
pub const STORED_TYPE: &str = "Stored";
pub const STORED_RANGE: (&str, &str) = ("-1000", "2000");

pub const RATING: &[&str] = &["poor", "fair", "good"];
pub const YES_NO: &[&str] = &["no", "yes"];

const fn cont(lo: &'static str, hi: &'static str, decimals: u32, unit: &'static str) -> ParamKind {
    ParamKind::Continuous { lo, hi, decimals, unit }
}

const fn disc(ty: &'static str, levels: &'static [&'static str]) -> ParamKind {
    ParamKind::Discrete { ty, levels }
}

use Category::{Bond, Performance, Production};

pub const ADHESIVE_PARAMS: [ParamDef; 21] = [
    ParamDef {
        id: "strength",
        stem: "Strength",
        effective: "BondStrength",
        label: "Bond strength (MPa)",
        category: Performance,
        kind: cont("2", "40", 1, "MPa"),
    },
    ParamDef {
        id: "elongation",
        stem: "Elongation",
        effective: "Elongation",
        label: "Elongation at break (ratio)",
        category: Performance,
        kind: cont("0.01", "5", 2, ""),
    },
    ParamDef {
        id: "service_min",
        stem: "ServiceMin",
        effective: "ServiceTempMin",
        label: "Lowest service temperature (°C)",
        category: Performance,
        kind: cont("-70", "0", 0, "°C"),
    },
    ParamDef {
        id: "service_max",
        stem: "ServiceMax",
        effective: "ServiceTempMax",
        label: "Highest service temperature (°C)",
        category: Performance,
        kind: cont("60", "260", 0, "°C"),
    },
    ParamDef {
        id: "application_min",
        stem: "ApplicationMin",
        effective: "ApplicationTempMin",
        label: "Lowest application temperature (°C)",
        category: Production,
        kind: cont("0", "20", 0, "°C"),
    },
    ParamDef {
        id: "application_max",
        stem: "ApplicationMax",
        effective: "ApplicationTempMax",
        label: "Highest application temperature (°C)",
        category: Production,
        kind: cont("25", "60", 0, "°C"),
    },
    ParamDef {
        id: "price",
        stem: "Price",
        effective: "Price",
        label: "Price per kg",
        category: Production,
        kind: cont("5", "250", 0, "EUR/kg"),
    },
    ParamDef {
        id: "viscosity",
        stem: "Viscosity",
        effective: "Viscosity",
        label: "Viscosity (Pa·s)",
        category: Production,
        kind: cont("0.05", "400", 2, "Pa·s"),
    },
    ParamDef {
        id: "cure_time",
        stem: "CureTime",
        effective: "CureTime",
        label: "Cure time (min)",
        category: Production,
        kind: cont("1", "1440", 0, "min"),
    },
    ParamDef {
        id: "pot_life",
        stem: "PotLife",
        effective: "PotLife",
        label: "Pot life (min)",
        category: Production,
        kind: cont("1", "240", 0, "min"),
    },
    ParamDef {
        id: "max_gap",
        stem: "MaxGap",
        effective: "MaxGap",
        label: "Largest fillable gap (mm)",
        category: Bond,
        kind: cont("0.05", "10", 2, "mm"),
    },
    ParamDef {
        id: "cure",
        stem: "Cure",
        effective: "CureMechanism",
        label: "Cure mechanism",
        category: Production,
        kind: disc("CureKind", &["heat", "moisture", "uv", "mixing", "evaporation"]),
    },
    ParamDef {
        id: "water",
        stem: "Water",
        effective: "WaterResistance",
        label: "Water resistance",
        category: Performance,
        kind: disc("Rating", RATING),
    },
    ParamDef {
        id: "solvent",
        stem: "Solvent",
        effective: "SolventResistance",
        label: "Solvent resistance",
        category: Performance,
        kind: disc("Rating", RATING),
    },
    ParamDef {
        id: "uv",
        stem: "Uv",
        effective: "UvResistance",
        label: "UV resistance",
        category: Performance,
        kind: disc("Rating", RATING),
    },
    ParamDef {
        id: "flexibility",
        stem: "Flexibility",
        effective: "Flexibility",
        label: "Flexibility of the cured bond",
        category: Bond,
        kind: disc("Flex", &["rigid", "semi_rigid", "flexible"]),
    },
    ParamDef {
        id: "color",
        stem: "Color",
        effective: "Color",
        label: "Colour",
        category: Production,
        kind: disc("Colour", &["clear", "white", "grey", "black", "amber"]),
    },
    ParamDef {
        id: "gap_filling",
        stem: "GapFilling",
        effective: "GapFilling",
        label: "Gap filling",
        category: Bond,
        kind: disc("YesNo", YES_NO),
    },
    ParamDef {
        id: "food_safe",
        stem: "FoodSafe",
        effective: "FoodSafe",
        label: "Food safe",
        category: Production,
        kind: disc("YesNo", YES_NO),
    },
    ParamDef {
        id: "low_energy",
        stem: "LowEnergy",
        effective: "LowEnergyBonding",
        label: "Bonds low surface energy plastics",
        category: Bond,
        kind: disc("YesNo", YES_NO),
    },
    ParamDef {
        id: "solvent_based",
        stem: "SolventBased",
        effective: "SolventBased",
        label: "Solvent based",
        category: Production,
        kind: disc("YesNo", YES_NO),
    },
];

/// Substrate parameters. `stem` is the function symbol itself here, as
/// substrates have no family fallback.
pub const SUBSTRATE_PARAMS: [ParamDef; 11] = [
    ParamDef {
        id: "surface_energy",
        stem: "SurfaceEnergy",
        effective: "",
        label: "Surface energy (mN/m)",
        category: Category::Hidden,
        kind: cont("18", "72", 0, "mN/m"),
    },
    ParamDef {
        id: "water_absorption",
        stem: "WaterAbsorption",
        effective: "",
        label: "Water absorption (%)",
        category: Category::Hidden,
        kind: cont("0", "30", 1, "%"),
    },
    ParamDef {
        id: "thermal_expansion",
        stem: "ThermalExpansion",
        effective: "",
        label: "Thermal expansion (µm/m·K)",
        category: Category::Hidden,
        kind: cont("0.5", "200", 1, "µm/m·K"),
    },
    ParamDef {
        id: "max_temp",
        stem: "SubstrateMaxTemp",
        effective: "",
        label: "Highest substrate temperature (°C)",
        category: Category::Hidden,
        kind: cont("50", "400", 0, "°C"),
    },
    ParamDef {
        id: "material",
        stem: "Material",
        effective: "",
        label: "Material class",
        category: Category::Hidden,
        kind: disc("MaterialClass", &["metal", "plastic", "composite", "glass", "wood", "ceramic", "elastomer"]),
    },
    ParamDef {
        id: "porous",
        stem: "Porous",
        effective: "",
        label: "Porous",
        category: Category::Hidden,
        kind: disc("YesNo", YES_NO),
    },
    ParamDef {
        id: "solvent_sensitive",
        stem: "SolventSensitive",
        effective: "",
        label: "Attacked by solvents",
        category: Category::Hidden,
        kind: disc("YesNo", YES_NO),
    },
    ParamDef {
        id: "flexible",
        stem: "FlexibleSubstrate",
        effective: "",
        label: "Flexible",
        category: Category::Hidden,
        kind: disc("YesNo", YES_NO),
    },
    ParamDef {
        id: "transparent",
        stem: "TransparentSubstrate",
        effective: "",
        label: "Transparent",
        category: Category::Hidden,
        kind: disc("YesNo", YES_NO),
    },
    ParamDef {
        id: "roughness",
        stem: "Roughness",
        effective: "",
        label: "Surface roughness",
        category: Category::Hidden,
        kind: disc("Roughness", &["smooth", "rough"]),
    },
    ParamDef {
        id: "pretreatment",
        stem: "Pretreatment",
        effective: "",
        label: "Usual pretreatment",
        category: Category::Hidden,
        kind: disc("Pretreatment", &["degrease", "abrade", "primer", "plasma"]),
    },
];

pub fn adhesive_param(id: &str) -> Option<&'static ParamDef> {
    ADHESIVE_PARAMS.iter().find(|p| p.id == id)
}

pub fn substrate_param(id: &str) -> Option<&'static ParamDef> {
    SUBSTRATE_PARAMS.iter().find(|p| p.id == id)
}
