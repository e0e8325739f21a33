use std::fs;
use std::path::Path;

use kbsel::adhesive::{build_kb, generate_synthetic_catalog, BuildError, Catalog, CatalogError, RequirementSchema};
use kbsel::parser::parse_kb_file;
use kbsel::{KnowledgeBase, ParseDiagnostic};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{}", lines(.0))]
    Parse(Vec<ParseDiagnostic>),
    #[error("{}", lines(.0))]
    Catalog(Vec<CatalogError>),
    #[error(transparent)]
    Build(#[from] BuildError),
}

fn lines<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

pub struct LoadedKb {
    /// Name sessions use to refer to the KB.
    pub id: String,
    pub kb: KnowledgeBase,
}

/// Loads a KB from a `.kb` document or a catalog directory. Without a path
/// the synthetic adhesive catalog for `seed` is used.
///
/// A catalog directory holds `adhesives.csv`, `families.csv` and
/// `substrates.csv`, and optionally a `tables.cdmn` replacing the standard
/// decision tables.
fn io(p: &Path) -> impl FnOnce(std::io::Error) -> LoadError {
    let path = p.display().to_string();
    move |source| LoadError::Io { path, source }
}

pub fn load_kb(path: Option<&Path>, seed: u64) -> Result<LoadedKb, LoadError> {
    let Some(path) = path else {
        let kb = build_kb(&generate_synthetic_catalog(seed), &RequirementSchema::standard())?;
        return Ok(LoadedKb { id: "adhesive".into(), kb });
    };
    let id = path.file_stem().map_or("kb".to_string(), |s| s.to_string_lossy().into_owned());
    if path.is_dir() {
        let catalog = Catalog::load(path).map_err(LoadError::Catalog)?;
        let mut schema = RequirementSchema::standard();
        let tables = path.join("tables.cdmn");
        if tables.exists() {
            schema.tables = fs::read_to_string(&tables).map_err(io(&tables))?;
        }
        return Ok(LoadedKb { id, kb: build_kb(&catalog, &schema)? });
    }
    let text = fs::read_to_string(path).map_err(io(path))?;
    let kb = parse_kb_file(&text, &path.display().to_string()).map_err(LoadError::Parse)?;
    Ok(LoadedKb { id, kb })
}
