//! Versioned JSON catalog files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{Catalog, GlyphRecord};
use crate::error::{Error, Result};

pub const CATALOG_FORMAT: &str = "sdfit-catalog";
pub const CATALOG_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CatalogFile {
    format: String,
    version: u32,
    /// Template set the parameter layouts refer to (`builtin` or a template file path).
    templates: String,
    records: Vec<GlyphRecord>,
}

pub fn write_catalog(catalog: &Catalog, templates: &str) -> String {
    let file = CatalogFile {
        format: CATALOG_FORMAT.into(),
        version: CATALOG_VERSION,
        templates: templates.into(),
        records: catalog.records().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("catalog serialization")
}

/// Parses a catalog and the template reference it carries.
pub fn read_catalog(text: &str) -> Result<(Catalog, String)> {
    let file: CatalogFile = serde_json::from_str(text).map_err(|e| Error::json("catalog file", e))?;
    if file.format != CATALOG_FORMAT {
        return Err(Error::invalid(format!("not a catalog file (format {:?})", file.format)));
    }
    if file.version != CATALOG_VERSION {
        return Err(Error::invalid(format!("unsupported catalog version {}", file.version)));
    }
    Ok((Catalog::new(file.records)?, file.templates))
}

pub fn load_catalog(path: &Path) -> Result<(Catalog, String)> {
    read_catalog(&std::fs::read_to_string(path)?)
}
